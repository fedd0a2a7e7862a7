import numpy as np
import pytest

from dsubmod.multilinear import facility_value_oracle
from dsubmod.polytope import PartitionMatroid, UniformMatroid
from dsubmod.rounding import pipage_round, randomized_round
from dsubmod.setfn import FacilityLocation

from conftest import random_ratings


def test_integral_input_unchanged():
    f = FacilityLocation([[1, 2, 3]])
    res = pipage_round([1, 0, 1], UniformMatroid(3, 2), facility_value_oracle(f), f)
    assert res.selected == (0, 2) and res.steps == 0


def test_single_user_example():
    f = FacilityLocation([[4, 2]])
    res = pipage_round([0.5, 0.5], UniformMatroid(2, 1), facility_value_oracle(f), f)
    assert res.selected == (0,)
    assert res.value == 4 and res.fractional_value == pytest.approx(2.5)


def test_pipage_feasible_and_lossless(rng):
    body = PartitionMatroid.from_lists([[0, 1, 2], [3, 4, 5, 6]], [1, 2])
    for _ in range(20):
        f = FacilityLocation(random_ratings(rng, 4, 7))
        x = rng.random(7)
        x[:3] /= max(1.0, x[:3].sum())
        x[3:] *= min(1.0, 2 / x[3:].sum())
        res = pipage_round(x, body, facility_value_oracle(f), f)
        assert body.independent(res.selected)
        assert res.value >= res.fractional_value - 1e-9


def test_pipage_rejects_infeasible():
    f = FacilityLocation([[1, 1, 1]])
    with pytest.raises(ValueError):
        pipage_round([0.9, 0.9, 0.9], UniformMatroid(3, 1), facility_value_oracle(f))


def test_randomized_examples(rng):
    f = FacilityLocation(random_ratings(rng, 5, 8))
    body = UniformMatroid(8, 3)
    assert randomized_round(np.zeros(8), body, f, trials=4, rng=0).selected == ()
    x = np.zeros(8)
    x[[1, 4, 6]] = 1
    assert randomized_round(x, body, f, trials=4, rng=0).selected == (1, 4, 6)


def test_randomized_quality():
    gen = np.random.default_rng(3)
    f = FacilityLocation(random_ratings(gen, 10, 8))
    body = UniformMatroid(8, 3)
    x = np.full(8, 3 / 8)
    res = randomized_round(x, body, f, trials=64, rng=0, value_oracle=facility_value_oracle(f))
    assert body.independent(res.selected)
    assert res.value >= 0.95 * res.fractional_value
