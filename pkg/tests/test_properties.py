import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dsubmod.baselines import brute_force_optimum, centralized_greedy
from dsubmod.multilinear import exact_gradient, facility_closed_form, facility_value_oracle
from dsubmod.polytope import PartitionMatroid, UniformMatroid
from dsubmod.rounding import pipage_round
from dsubmod.setfn import FacilityLocation
from dsubmod.topology import build_graph, metropolis_weights, spectral_beta

SETTINGS = settings(max_examples=40, deadline=None)

ratings = st.integers(1, 4).flatmap(
    lambda users: st.integers(2, 7).flatmap(
        lambda p: arrays(float, (users, p), elements=st.integers(0, 5).map(float))))


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 9))
    kind = draw(st.sampled_from(["line", "complete", "erdos_renyi"]))
    if kind == "erdos_renyi":
        return build_graph(kind, n, edge_prob=0.6, seed=draw(st.integers(0, 100)))
    return build_graph(kind, n)


@SETTINGS
@given(graphs(), st.integers(1, 6))
def test_mixing_contracts_at_rate_beta(g, k):
    w = metropolis_weights(g)
    beta = spectral_beta(w).beta
    gap = np.linalg.matrix_power(w, k) - np.full(w.shape, 1.0 / g.n)
    assert np.linalg.norm(gap, 2) <= beta ** k + 1e-10
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12) and np.allclose(w, w.T)


@SETTINGS
@given(arrays(float, 7, elements=st.floats(-5, 5)), st.integers(1, 7),
       st.floats(0.1, 10))
def test_lmo_is_optimal_and_scale_invariant(d, k, scale):
    body = UniformMatroid(7, k)
    v = body.lmo(d)
    assert body.contains(v)
    best = max(float(d @ u) for u in body.vertices())
    assert float(d @ v) >= best - 1e-12
    assert np.array_equal(body.lmo(scale * d), v)


@SETTINGS
@given(ratings, st.data())
def test_gradient_antitone(r, data):
    f = FacilityLocation(r)
    p = f.p
    x = data.draw(arrays(float, p, elements=st.floats(0, 1)))
    bump = data.draw(arrays(float, p, elements=st.floats(0, 1)))
    y = np.minimum(1.0, x + bump)
    assert np.all(facility_closed_form(f, y)[1] <= facility_closed_form(f, x)[1] + 1e-9)


@SETTINGS
@given(ratings, st.data())
def test_finite_differences(r, data):
    f = FacilityLocation(r)
    x = data.draw(arrays(float, f.p, elements=st.floats(0.05, 0.95)))
    _, grad = facility_closed_form(f, x)
    h = 1e-6
    for i in range(f.p):
        e = np.zeros(f.p)
        e[i] = h
        fd = (facility_closed_form(f, x + e)[0] - facility_closed_form(f, x - e)[0]) / (2 * h)
        assert abs(fd - grad[i]) <= 1e-5 * max(1.0, abs(grad[i]))
    assert np.allclose(exact_gradient(f, x), grad, atol=1e-9)


@SETTINGS
@given(ratings, st.integers(1, 4))
def test_lazy_greedy_and_guarantee(r, k):
    f = FacilityLocation(r)
    body = UniformMatroid(f.p, min(k, f.p))
    lazy = centralized_greedy(f, body)
    assert lazy == centralized_greedy(f, body, lazy=False)
    _, opt, _ = brute_force_optimum(f, body)
    assert lazy.value >= (1 - 1 / np.e) * opt - 1e-12


@SETTINGS
@given(ratings, st.data())
def test_pipage_never_loses(r, data):
    f = FacilityLocation(r)
    p = f.p
    split = data.draw(st.integers(1, p - 1))
    body = PartitionMatroid.from_lists([list(range(split)), list(range(split, p))],
                                       [data.draw(st.integers(1, split)),
                                        data.draw(st.integers(1, p - split))])
    x = data.draw(arrays(float, p, elements=st.floats(0, 1)))
    for members, cap in zip(body.parts, body.caps):
        idx = list(members)
        total = x[idx].sum()
        if total > cap:
            x[idx] *= cap / total
    res = pipage_round(x, body, facility_value_oracle(f), f)
    assert body.independent(res.selected)
    assert res.value >= res.fractional_value - 1e-9
    assert all(b >= a - 1e-9 for a, b in zip(res.trace, res.trace[1:]))
