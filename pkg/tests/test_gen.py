import itertools

import numpy as np
import pytest
from scipy import stats

from vnfplace.gen import DEFAULT_UPF_SPECS, GeneratorConfig, UpfCatalog, generate
from vnfplace.model import instance_to_dict, required_replicas


class TestCatalog:
    def test_default_footprints(self):
        cat = UpfCatalog()
        assert cat.specs["NAT"] == (1, 1)
        assert cat.specs["FW"] == (2, 3)
        assert cat.specs["IDPS"] == (2, 2)
        assert cat.specs["TM"] == (1, 3)
        assert cat.specs["VOC"] == (2, 2)
        assert cat.specs["WOC"] == (1, 2)

    def test_exemplar_chain_sums(self):
        cat = UpfCatalog()
        assert cat.chain_demand(("NAT", "FW", "IDPS", "TM")) == (6, 9)
        assert cat.chain_demand(("NAT", "FW", "VOC", "WOC")) == (6, 8)

    def test_chain_hull_from_exhaustive_enumeration(self):
        # all C(4,2)=6 chains, enumerated here independently of the generator
        cat = UpfCatalog()
        cpus, rams = set(), set()
        for pair in itertools.combinations(cat.optional, 2):
            c, d = cat.chain_demand(cat.mandatory + pair)
            cpus.add(c)
            rams.add(d)
        assert cpus == {5, 6, 7}
        assert rams == {8, 9}

    def test_overlapping_pools_rejected(self):
        with pytest.raises(ValueError):
            UpfCatalog(specs=dict(DEFAULT_UPF_SPECS),
                       mandatory=("NAT", "FW"), optional=("NAT", "TM", "VOC", "WOC"))


class TestGenerate:
    def test_deterministic_for_seed(self):
        a = generate(GeneratorConfig(seed=42))
        b = generate(GeneratorConfig(seed=42))
        assert instance_to_dict(a) == instance_to_dict(b)

    def test_different_seeds_differ(self):
        a = generate(GeneratorConfig(seed=1))
        b = generate(GeneratorConfig(seed=2))
        assert instance_to_dict(a) != instance_to_dict(b)

    def test_request_prefix_stable_under_count(self):
        small = generate(GeneratorConfig(request_count=20, seed=8))
        large = generate(GeneratorConfig(request_count=50, seed=8))
        for a, b in zip(small.requests, large.requests[:20]):
            assert a == b

    def test_capacity_ranges(self):
        inst = generate(GeneratorConfig(seed=3))
        assert inst.n_mecs == 10
        for mec in inst.mecs:
            assert 32 <= mec.cpu_capacity <= 56
            assert mec.cpu_capacity == int(mec.cpu_capacity)
            assert 32 <= mec.ram_capacity <= 80
            assert mec.ram_capacity == int(mec.ram_capacity)
            assert mec.uplink_capacity == 75.0
            assert mec.downlink_capacity == 250.0

    def test_request_fields_within_hull(self):
        inst = generate(GeneratorConfig(request_count=300, seed=4))
        for req in inst.requests:
            assert req.cpu_demand in (5, 6, 7)
            assert req.ram_demand in (8, 9)
            assert 6.0 <= req.uplink_demand < 15.0
            assert 20.0 <= req.downlink_demand < 40.0
            assert req.failure_threshold in (0.01, 0.001, 0.0001)
            # rewards: base in [6, 8) scaled by availability in (0.99, 1)
            assert 5.94 <= req.reward < 8.0
            assert req.upf_chain[:2] == ("NAT", "FW")

    def test_replicas_follow_thresholds(self):
        inst = generate(GeneratorConfig(request_count=40, seed=6))
        for req, count in zip(inst.requests, inst.replicas):
            assert count == required_replicas(inst.failure_model, req.failure_threshold)
        assert set(inst.replicas) <= {1, 2}

    def test_optional_pair_uniformity(self):
        # 6 unordered pairs should be equally likely; chi-square at 1%
        inst = generate(GeneratorConfig(mec_count=1, request_count=10_000, seed=12))
        pairs = {}
        for req in inst.requests:
            key = tuple(sorted(req.upf_chain[2:]))
            pairs[key] = pairs.get(key, 0) + 1
        assert len(pairs) == 6
        counts = np.array(list(pairs.values()), dtype=float)
        expected = counts.sum() / 6.0
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < stats.chi2.ppf(0.99, df=5)

    def test_threshold_levels_roughly_balanced(self):
        inst = generate(GeneratorConfig(mec_count=1, request_count=3000, seed=13))
        eps = np.array([r.failure_threshold for r in inst.requests])
        for level in (0.01, 0.001, 0.0001):
            share = float((eps == level).mean())
            assert 0.28 < share < 0.39

    def test_custom_availability_levels(self):
        cfg = GeneratorConfig(request_count=30, availability_levels=(0.95,), seed=2)
        inst = generate(cfg)
        assert all(r.failure_threshold == 0.05 for r in inst.requests)


class TestConfigValidation:
    def test_bad_range_rejected(self):
        with pytest.raises(ValueError, match="cpu_range"):
            GeneratorConfig(cpu_range=(56, 32)).validate()

    def test_bad_level_rejected(self):
        with pytest.raises(ValueError, match="availability"):
            GeneratorConfig(availability_levels=(1.0,)).validate()

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError, match="seed"):
            GeneratorConfig(seed=-1).validate()

    def test_from_dict_roundtrip(self):
        cfg = GeneratorConfig(mec_count=4, request_count=7, seed=5)
        assert GeneratorConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            GeneratorConfig.from_dict({"mec_count": 3, "mystery": 1})

    def test_from_dict_bad_version(self):
        with pytest.raises(ValueError, match="version"):
            GeneratorConfig.from_dict({"version": 9})
