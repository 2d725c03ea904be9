import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smbo.space import MISSING, Param, ParamSpace, box, categorical, continuous, integer


class TestValidate:
    def test_duplicate_name(self):
        sp = ParamSpace([continuous("x1", 0, 1), continuous("x1", 0, 2)])
        assert any("duplicate name" in v for v in sp.validate())

    def test_empty_interval(self):
        sp = ParamSpace([continuous("x", 0, 0)])
        assert any("empty interval" in v for v in sp.validate())

    def test_dependent_space_is_valid(self, svm_space):
        assert svm_space.validate() == []

    def test_requirement_must_come_earlier(self):
        sp = ParamSpace([continuous("g", 0, 1, requires={"k": "a"}), categorical("k", ["a", "b"])])
        assert any("not declared earlier" in v for v in sp.validate())

    def test_requirement_value_outside_parent_domain(self):
        sp = ParamSpace([categorical("k", ["a", "b"]), continuous("g", 0, 1, requires={"k": "c"})])
        assert any("outside domain" in v for v in sp.validate())

    def test_level_problems(self):
        assert ParamSpace([categorical("k", [])]).validate()
        assert ParamSpace([categorical("k", ["a", "a"])]).validate()
        assert ParamSpace([categorical("k", ["a", MISSING])]).validate()

    def test_infinite_bounds_and_bad_transform(self):
        assert ParamSpace([continuous("x", 0, math.inf)]).validate()
        assert ParamSpace([continuous("x", 0, 1, transform="cube")]).validate()

    def test_empty_space(self):
        assert ParamSpace([]).validate() == ["space has no parameters"]


class TestActivity:
    def test_linear_kernel_deactivates_gamma(self, svm_space):
        assert not svm_space.is_active({"kernel": "linear", "C": 0.0, "gamma": None}, "gamma")

    def test_radial_kernel_activates_gamma(self, svm_space):
        assert svm_space.is_active({"kernel": "radial", "C": 0.0, "gamma": 1.0}, "gamma")

    def test_unconditional_parameter_always_active(self, svm_space):
        for k in ("linear", "radial"):
            assert svm_space.is_active({"kernel": k}, "C")

    def test_unknown_name(self, svm_space):
        with pytest.raises(KeyError):
            svm_space.is_active({}, "nope")

    def test_chain_inherits_parent_inactivity(self):
        sp = ParamSpace([categorical("a", ["on", "off"]),
                         categorical("b", ["x", "y"], requires={"a": "on"}),
                         continuous("c", 0, 1, requires={"b": "x"})])
        # b's stale value must not activate c when b itself is inactive
        assert not sp.is_active({"a": "off", "b": "x", "c": 0.5}, "c")
        assert sp.is_active({"a": "on", "b": "x", "c": 0.5}, "c")

    def test_violations(self, svm_space):
        assert svm_space.violations({"kernel": "linear", "C": 0.0, "gamma": 1.0})
        assert svm_space.violations({"kernel": "radial", "C": 0.0, "gamma": None})
        assert svm_space.violations({"kernel": "radial", "C": 9.0, "gamma": 0.0})
        assert svm_space.violations({"kernel": "radial", "C": 0.0, "gamma": 0.0, "z": 1})
        assert svm_space.violations({"kernel": "linear", "C": 1.0, "gamma": None}) == []


class TestSampling:
    def test_unit_interval(self):
        sp = ParamSpace([continuous("x", 0, 1)])
        a = sp.sample(np.random.default_rng(0))
        assert 0 <= a["x"] <= 1

    def test_linear_draw_masks_gamma(self, svm_space, rng):
        draws = [svm_space.sample(rng) for _ in range(200)]
        for a in draws:
            assert (a["gamma"] is None) == (a["kernel"] == "linear")
            svm_space.check(a)

    def test_categorical_frequencies(self):
        sp = ParamSpace([categorical("k", ["a", "b", "c"])])
        M = sp.sample_matrix(10_000, np.random.default_rng(1))
        freq = np.bincount(M[:, 0].astype(int), minlength=3) / 10_000
        assert np.all(np.abs(freq - 1 / 3) <= 0.05 / 3)

    def test_bounds_over_many_draws(self):
        sp = ParamSpace([continuous("x", -2.5, 7), integer("n", -3, 4), categorical("k", ["p", "q"]),
                         continuous("y", 1, 2, requires={"k": "q"})])
        M = sp.sample_matrix(100_000, np.random.default_rng(2))
        active = sp.active_matrix(M)
        assert np.all((M[:, 0] >= -2.5) & (M[:, 0] <= 7))
        assert np.all(np.isin(M[:, 1], np.arange(-3, 5)))
        y = M[active[:, 3], 3]
        assert np.all((y >= 1) & (y <= 2))
        assert np.all(M[~active[:, 3], 3] == sp["y"].sentinel)

    def test_integers_cover_range(self):
        sp = ParamSpace([integer("n", 0, 3)])
        M = sp.sample_matrix(2000, np.random.default_rng(3))
        assert set(M[:, 0].astype(int)) == {0, 1, 2, 3}

    def test_region_restricts_draws(self):
        sp = ParamSpace([continuous("x", 0, 10), categorical("k", ["a", "b", "c"])])
        M = sp.sample_matrix(500, np.random.default_rng(4), region=[(2, 3), [0, 2]])
        assert np.all((M[:, 0] >= 2) & (M[:, 0] <= 3))
        assert set(M[:, 1]) <= {0.0, 2.0}


class TestEncoding:
    def test_active_numeric_is_identity(self):
        sp = ParamSpace([continuous("x1", 0, 10)])
        assert sp.encode({"x1": 3.0}) == (3.0,)

    def test_inactive_numeric_sentinel(self):
        sp = ParamSpace([categorical("k", ["a", "b"]), continuous("x", 0, 10, requires={"k": "b"})])
        assert sp.encode({"k": "a", "x": None})[1] == 30.0

    def test_inactive_categorical_missing_level(self):
        sp = ParamSpace([categorical("use", ["y", "n"]),
                         categorical("kernel", ["lin", "rad"], requires={"use": "y"})])
        assert sp.encode({"use": "n", "kernel": None}) == ("n", MISSING)

    def test_fixed_length(self, svm_space):
        a = {"kernel": "linear", "C": 1.0, "gamma": None}
        b = {"kernel": "radial", "C": 1.0, "gamma": -2.0}
        assert len(svm_space.encode(a)) == len(svm_space.encode(b)) == 3

    def test_invalid_assignment_raises(self, svm_space):
        with pytest.raises(ValueError):
            svm_space.encode({"kernel": "radial", "C": 1.0, "gamma": None})

    def test_matrix_round_trip(self, svm_space, rng):
        for _ in range(100):
            a = svm_space.sample(rng)
            assert svm_space.decode(svm_space.to_matrix([a])[0]) == a

    def test_integer_decodes_to_int(self):
        sp = ParamSpace([integer("n", 1, 5)])
        assert sp.decode([3.0]) == {"n": 3} and isinstance(sp.decode([3.0])["n"], int)

    @given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_sentinel_outside_box(self, lo, width):
        p = continuous("x", lo, lo + width)
        assert not (p.lower <= p.sentinel <= p.upper)


class TestTransformAndJson:
    def test_log2_transform(self, svm_space):
        t = svm_space.transform({"kernel": "radial", "C": 3.0, "gamma": -1.0})
        assert t == {"kernel": "radial", "C": 8.0, "gamma": 0.5}

    def test_log10_transform(self):
        sp = ParamSpace([continuous("lr", -4, -1, transform="log10")])
        assert sp.transform({"lr": -2.0})["lr"] == pytest.approx(0.01)

    def test_json_round_trip(self, svm_space):
        doc = json.loads(svm_space.to_json())
        assert doc[2]["requires"] == [{"param": "kernel", "equals": "radial"}]
        again = ParamSpace.from_json(svm_space.to_json())
        assert again.params == svm_space.params

    def test_json_rejects_invalid(self):
        bad = json.dumps([{"name": "x", "type": "continuous", "lower": 1, "upper": 0}])
        with pytest.raises(ValueError):
            ParamSpace.from_json(bad)

    def test_box_helper(self):
        sp = box([0, -1], [1, 1])
        assert sp.names == ["x1", "x2"] and sp.is_numeric and not sp.has_discrete


def test_param_is_hashable_and_frozen():
    p = continuous("x", 0, 1)
    assert isinstance(hash(p), int)
    with pytest.raises(Exception):
        p.lower = 3  # type: ignore[misc]
    assert isinstance(p, Param)
