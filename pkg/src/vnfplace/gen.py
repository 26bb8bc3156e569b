"""Seeded random instance generation for the simulated edge deployment.

Every request carries a user-plane function chain: two mandatory functions
(NAT, FW) plus two optional ones drawn uniformly without replacement, so CPU
and RAM demands come from the chain catalog rather than free ranges.  Node
capacities, link demands, availability classes and rewards follow the
deployment defaults baked into ``GeneratorConfig``.

Request k is generated from its own derived random stream, so the first k
requests of a seed are identical no matter how many requests are asked for.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .model import FailureModel, MecNode, ProblemInstance, ServiceRequest

# (cpu cores, ram GB) per user-plane function
DEFAULT_UPF_SPECS = {
    "IDPS": (2, 2),
    "FW": (2, 3),
    "NAT": (1, 1),
    "TM": (1, 3),
    "VOC": (2, 2),
    "WOC": (1, 2),
}

GENERATOR_SCHEMA_VERSION = 1

# sub-stream tags so node and request draws never share a stream
_MEC_STREAM = 0
_REQUEST_STREAM = 1


@dataclass(frozen=True)
class UpfCatalog:
    """Catalog of chain building blocks: mandatory pair plus optional pool."""

    specs: dict = field(default_factory=lambda: dict(DEFAULT_UPF_SPECS))
    mandatory: tuple = ("NAT", "FW")
    optional: tuple = ("IDPS", "TM", "VOC", "WOC")

    def __post_init__(self):
        for name in self.mandatory + self.optional:
            if name not in self.specs:
                raise ValueError(f"unknown function in catalog layout: {name}")
        if set(self.mandatory) & set(self.optional):
            raise ValueError("mandatory and optional pools must be disjoint")
        for name, (cpu, ram) in self.specs.items():
            if cpu <= 0 or ram <= 0:
                raise ValueError(f"{name}: function footprints must be positive")

    def chain_demand(self, chain) -> tuple:
        cpu = sum(self.specs[u][0] for u in chain)
        ram = sum(self.specs[u][1] for u in chain)
        return cpu, ram


@dataclass
class GeneratorConfig:
    """Knobs for one random instance; defaults mirror the simulated deployment."""

    mec_count: int = 10
    cpu_range: tuple = (32, 56)
    ram_range: tuple = (32, 80)
    uplink_capacity: float = 75.0
    downlink_capacity: float = 250.0
    request_count: int = 50
    availability_levels: tuple = (0.99, 0.999, 0.9999)
    reward_base_range: tuple = (6.0, 8.0)
    uplink_demand_range: tuple = (6.0, 15.0)
    downlink_demand_range: tuple = (20.0, 40.0)
    vnf_failure: float = 0.001
    pm_failure: float = 0.004
    seed: int = 0

    def validate(self) -> None:
        if self.mec_count < 1:
            raise ValueError("mec_count must be at least 1")
        if self.request_count < 0:
            raise ValueError("request_count must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        for name in ("cpu_range", "ram_range", "reward_base_range",
                     "uplink_demand_range", "downlink_demand_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo <= 0:
                raise ValueError(f"{name}: bad range ({lo}, {hi})")
        if self.uplink_capacity <= 0 or self.downlink_capacity <= 0:
            raise ValueError("link capacities must be positive")
        if not self.availability_levels:
            raise ValueError("at least one availability level required")
        for level in self.availability_levels:
            if not 0.0 < level < 1.0:
                raise ValueError(f"availability level {level} must lie in (0, 1)")
        # raises InvalidModelError on a bad split
        FailureModel(self.vnf_failure, self.pm_failure)

    def to_dict(self) -> dict:
        out = {"version": GENERATOR_SCHEMA_VERSION}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict):
        if not isinstance(data, dict):
            raise ValueError("generator config must be a mapping")
        data = dict(data)
        version = data.pop("version", GENERATOR_SCHEMA_VERSION)
        if version != GENERATOR_SCHEMA_VERSION:
            raise ValueError(f"unsupported generator config version: {version!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator config keys: {sorted(unknown)}")
        kwargs = {}
        for name, value in data.items():
            kwargs[name] = tuple(value) if isinstance(value, list) else value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


def generate(cfg: GeneratorConfig, catalog: UpfCatalog = None) -> ProblemInstance:
    """Draw one instance from the config's seeded streams."""
    cfg.validate()
    if catalog is None:
        catalog = UpfCatalog()
    fm = FailureModel(cfg.vnf_failure, cfg.pm_failure)

    mec_rng = np.random.default_rng([_MEC_STREAM, cfg.seed])
    mecs = []
    for m in range(cfg.mec_count):
        cpu = int(mec_rng.integers(int(cfg.cpu_range[0]), int(cfg.cpu_range[1]) + 1))
        ram = int(mec_rng.integers(int(cfg.ram_range[0]), int(cfg.ram_range[1]) + 1))
        mecs.append(MecNode(id=m, cpu_capacity=cpu, ram_capacity=ram,
                            uplink_capacity=cfg.uplink_capacity,
                            downlink_capacity=cfg.downlink_capacity))

    # exact decimal thresholds, not 1 - level float residue
    thresholds = [round(1.0 - level, 12) for level in cfg.availability_levels]
    n_opt = len(catalog.optional)
    requests = []
    for k in range(cfg.request_count):
        rng = np.random.default_rng([_REQUEST_STREAM, cfg.seed, k])
        pick = rng.choice(n_opt, size=2, replace=False)
        chain = catalog.mandatory + tuple(catalog.optional[i] for i in sorted(pick))
        cpu, ram = catalog.chain_demand(chain)
        eps_r = thresholds[int(rng.integers(len(thresholds)))]
        base = float(rng.uniform(*cfg.reward_base_range))
        up = float(rng.uniform(*cfg.uplink_demand_range))
        dw = float(rng.uniform(*cfg.downlink_demand_range))
        requests.append(ServiceRequest(
            id=k, cpu_demand=cpu, ram_demand=ram,
            uplink_demand=up, downlink_demand=dw,
            failure_threshold=eps_r, reward=base * (1.0 - eps_r),
            upf_chain=chain,
        ))

    return ProblemInstance.from_parts(mecs, requests, fm)
