"""Concentration guarantees for rounded placements.

Scaling a node's load by the largest single demand alpha turns it into a sum
of independent [0, 1] variables with mean mu equal to the scaled fractional
load, so a multiplicative Chernoff bound caps the rounded load at

    (1 + delta) * fractional load,   delta = 3 ln(R) / mu + 3,

with per-node exceedance probability at most 1/R^2 for R requests.  On the
objective side the rounded reward stays above (1 - delta_opt) times the
relaxed optimum with delta_opt = sqrt(4 ln(R) / mu_opt).  Bounds are reported
verbatim: a factor of 1 - delta_opt <= 0 is flagged vacuous, never clamped,
and a node with zero fractional load has no bound to state.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import RESOURCES, FractionalSolution, ProblemInstance
from .rounding import rounding_ensemble


class UndefinedBoundError(ValueError):
    """No fractional load, hence no multiplicative bound to state."""


def violation_factor(frac: FractionalSolution, inst: ProblemInstance,
                     resource: str, mec_id: int) -> float:
    """Multiplicative load ceiling (1 + delta) for one node and resource."""
    demand = inst.demand_vector(resource)
    alpha = float(demand.max())
    mu = float(frac.x[:, mec_id] @ demand) / alpha
    if mu <= 0.0:
        raise UndefinedBoundError(
            f"{resource} load on mec {mec_id} is zero in the relaxation"
        )
    R = inst.n_requests
    delta = 3.0 * math.log(R) / mu + 3.0
    factor = 1.0 + delta
    assert abs(factor - (3.0 * math.log(R) / mu + 4.0)) < 1e-9
    return factor


def objective_bound_factor(frac: FractionalSolution, inst: ProblemInstance) -> float:
    """Multiplicative reward floor (1 - delta_opt); may be <= 0 (vacuous)."""
    rewards = inst.reward_vector()
    alpha = float(rewards.max())
    if alpha <= 0.0:
        raise UndefinedBoundError("all rewards are zero")
    mu = float(rewards @ frac.y) / alpha
    if mu <= 0.0:
        raise UndefinedBoundError("relaxed objective is zero")
    delta_opt = math.sqrt(4.0 * math.log(inst.n_requests) / mu)
    return 1.0 - delta_opt


@dataclass
class BoundReport:
    """Per-node load factors and the objective floor for one relaxation.

    Factor arrays hold nan where the relaxation puts no load on a node.
    ``mec_request_ratio`` records M/R, the regime knob for how much slack the
    union bound over nodes leaves.
    """

    resource_alpha: dict
    resource_mu: dict
    resource_factor: dict
    objective_alpha: float
    objective_mu: float
    objective_factor: float
    vacuous_objective: bool
    mec_request_ratio: float

    def worst_factor(self, resource: str):
        """Largest defined factor across nodes, or None if none is defined."""
        factors = self.resource_factor[resource]
        defined = factors[~np.isnan(factors)]
        return float(defined.max()) if defined.size else None


def compute_bound_report(frac: FractionalSolution, inst: ProblemInstance) -> BoundReport:
    R = inst.n_requests
    if R == 0:
        raise UndefinedBoundError("no requests, nothing to bound")
    log_r = math.log(R)
    alphas, mus, factors = {}, {}, {}
    for res in RESOURCES:
        demand = inst.demand_vector(res)
        alpha = float(demand.max())
        mu = (frac.x.T @ demand) / alpha
        factor = np.full(inst.n_mecs, np.nan)
        loaded = mu > 0.0
        factor[loaded] = 3.0 * log_r / mu[loaded] + 4.0
        alphas[res], mus[res], factors[res] = alpha, mu, factor

    rewards = inst.reward_vector()
    obj_alpha = float(rewards.max())
    obj_mu = float(rewards @ frac.y) / obj_alpha if obj_alpha > 0 else 0.0
    if obj_mu > 0.0:
        obj_factor = 1.0 - math.sqrt(4.0 * log_r / obj_mu)
    else:
        obj_factor = float("nan")
    return BoundReport(
        resource_alpha=alphas,
        resource_mu=mus,
        resource_factor=factors,
        objective_alpha=obj_alpha,
        objective_mu=obj_mu,
        objective_factor=obj_factor,
        vacuous_objective=not obj_factor > 0.0,
        mec_request_ratio=inst.n_mecs / R,
    )


@dataclass
class EmpiricalViolationReport:
    """How often rounded loads actually cross their stated ceilings."""

    n_seeds: int
    exceed_fraction: dict          # resource -> fraction of seeds with any crossing
    max_load_over_capacity: dict   # resource -> worst load/capacity seen
    chernoff_ceiling: float        # 1/R^2, the per-node theory rate
    bound_report: BoundReport


def empirical_violation_check(inst: ProblemInstance, frac: FractionalSolution,
                              n_seeds: int, seed0: int = 0) -> EmpiricalViolationReport:
    """Round n_seeds times and count crossings of (1 + delta) * LP load."""
    if n_seeds < 100:
        raise ValueError("need at least 100 seeds for a meaningful rate")
    report = compute_bound_report(frac, inst)
    lp_loads = {res: inst.demand_vector(res) @ frac.x for res in RESOURCES}
    ceilings = {res: report.resource_factor[res] * lp_loads[res] for res in RESOURCES}

    exceed_counts = {res: 0 for res in RESOURCES}
    worst_ratio = {res: 0.0 for res in RESOURCES}
    for sol, metrics in rounding_ensemble(frac, inst, n_seeds, seed0=seed0):
        for res in RESOURCES:
            load = inst.demand_vector(res) @ sol.x
            ceiling = ceilings[res]
            defined = ~np.isnan(ceiling)
            if (load[defined] > ceiling[defined] + 1e-9).any():
                exceed_counts[res] += 1
            ratio = metrics.utilization[res].max() if inst.n_mecs else 0.0
            worst_ratio[res] = max(worst_ratio[res], float(ratio))

    return EmpiricalViolationReport(
        n_seeds=n_seeds,
        exceed_fraction={res: exceed_counts[res] / n_seeds for res in RESOURCES},
        max_load_over_capacity=worst_ratio,
        chernoff_ceiling=1.0 / inst.n_requests**2,
        bound_report=report,
    )
