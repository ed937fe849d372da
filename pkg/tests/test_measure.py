import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superres.measure import (AtomicMeasure, GridMeasure, NeighborhoodSpec,
                              SeparationError, SignedMeasure, approximate_residual,
                              indicator_vanishing, indicator_window, is_separated,
                              region_mass, separation, tv_norm)
from superres.metrics import d_gw


def test_atomic_validation():
    with pytest.raises(ValueError):
        AtomicMeasure([[0.5, 0.5]], [0.0])
    with pytest.raises(ValueError):
        AtomicMeasure([[0.5, 1.2]], [1.0])
    with pytest.raises(ValueError):
        AtomicMeasure([[0.5, 0.5], [0.5, 0.5]], [1.0, 1.0])
    m = AtomicMeasure.empty(3)
    assert m.K == 0 and m.dim == 3


def test_atomic_json_roundtrip():
    m = AtomicMeasure([[0.1, 0.2], [0.7, 0.9]], [1.0, 0.25])
    obj = json.loads(json.dumps(m.to_dict()))
    assert obj["atoms"][1] == {"loc": [0.7, 0.9], "amp": 0.25}
    back = AtomicMeasure.from_dict(obj)
    np.testing.assert_array_equal(back.locations, m.locations)
    np.testing.assert_array_equal(back.amplitudes, m.amplitudes)


def test_grid_measure_pruning_and_roundtrip():
    g = [np.linspace(0, 1, 4)] * 2
    w = np.zeros((4, 4))
    w[1, 2], w[3, 0], w[0, 0] = 0.5, 0.25, 1e-13
    m = GridMeasure.from_dense(g, w)
    assert m.weights.size == 2
    assert m.index.tolist() == [[1, 2], [3, 0]]
    back = GridMeasure.from_dict(json.loads(json.dumps(m.to_dict())))
    np.testing.assert_array_equal(back.dense(), m.dense())
    np.testing.assert_allclose(m.to_atomic().locations, [[1 / 3, 2 / 3], [1.0, 0.0]])


def test_tv_norm_examples():
    assert tv_norm(AtomicMeasure.empty(2)) == 0.0
    assert tv_norm(AtomicMeasure([[0.5, 0.5], [0.2, 0.8]], [1.0, 0.5])) == 1.5
    g = [np.linspace(0, 1, 3)]
    assert tv_norm(GridMeasure(g, [[0], [1], [2]], [0.1, 0.2, 0.3])) == pytest.approx(0.6)


def test_separation_examples():
    assert separation(AtomicMeasure([[0.5, 0.5, 0.5]], [1.0])) == 0.5
    assert separation(AtomicMeasure([[0.3, 0.4], [0.6, 0.9]], [1, 1])) == pytest.approx(0.1)
    assert separation(AtomicMeasure([[0.25], [0.75]], [1, 1])) == pytest.approx(0.25)
    with pytest.raises(ValueError, match="no atoms"):
        separation(AtomicMeasure.empty(2))


def _separation_oracle(locs):
    # every term of the definition, enumerated directly
    terms = [min(x, 1 - x) for row in locs for x in row]
    for i in range(len(locs)):
        for j in range(i + 1, len(locs)):
            terms += [abs(a - b) for a, b in zip(locs[i], locs[j])]
    return min(terms)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=5,
                unique=True))
def test_separation_matches_enumeration(points):
    m = AtomicMeasure(np.array(points), np.ones(len(points)))
    assert separation(m) == pytest.approx(_separation_oracle(points), abs=1e-15)


def test_region_mass_examples():
    spec = NeighborhoodSpec([[0.5, 0.5]], 0.1)
    m = AtomicMeasure([[0.5, 0.5]], [1.0])
    assert region_mass(m, (spec, 0)) == 1.0
    far = AtomicMeasure([[0.7, 0.3]], [0.8])
    assert region_mass(far, (spec, "complement")) == pytest.approx(0.8)
    # boundary is part of the closed ball
    edge = AtomicMeasure([[0.6, 0.4]], [2.0])
    assert region_mass(edge, (spec, 0)) == 2.0
    g = [np.linspace(0, 1, 11)] * 2
    mu_hat = GridMeasure(g, [[5, 4]], [0.4])
    h = SignedMeasure(mu_hat, m)
    assert region_mass(h, (spec, 0)) == pytest.approx(-0.6)


def test_indicators():
    F = indicator_vanishing([0.3, 0.7], 0.1)
    np.testing.assert_array_equal(F([0.0, 0.2, 0.3, 0.5, 0.79, 0.85]), [1, 0, 0, 1, 0, 1])
    assert indicator_vanishing([], 0.1)(0.4) == 1.0
    Fp, Fm = indicator_window(0.5, 0.1, 1), indicator_window(0.5, 0.1, -1)
    np.testing.assert_array_equal(Fp([0.39, 0.4, 0.6, 0.61]), [0, 1, 1, 0])
    np.testing.assert_array_equal(Fm([0.39, 0.5]), [0, -1])
    assert F.label == "F_T" and Fp.label == "F+" and Fm.label == "F-"


def test_residual_already_separated():
    mu = AtomicMeasure([[0.3, 0.6], [0.7, 0.2]], [1.0, 2.0])
    nu, r = approximate_residual(mu, 2, 0.1, d_gw)
    assert r == 0.0 and nu is mu


def test_residual_merge_example():
    mu = AtomicMeasure([[0.50], [0.51]], [1.0, 1.0])
    nu, r = approximate_residual(mu, 1, 0.3, d_gw)
    assert r <= 0.02 + 1e-12
    assert nu.K == 1 and is_separated(nu, 0.3)
    assert r == pytest.approx(d_gw(mu, nu), abs=1e-12)


def test_residual_infeasible():
    mu = AtomicMeasure([[0.5]], [1.0])
    with pytest.raises(SeparationError, match="separation infeasible"):
        approximate_residual(mu, 3, 0.5, d_gw)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_residual_output_is_feasible(seed):
    rng = np.random.default_rng(seed)
    mu = AtomicMeasure(rng.random((4, 2)), rng.uniform(0.5, 2, 4))
    nu, r = approximate_residual(mu, 2, 0.15, d_gw, max_rounds=5)
    assert nu.K <= 2 and is_separated(nu, 0.15, tol=1e-12)
    assert r == pytest.approx(d_gw(mu, nu), abs=1e-9)
    # mass is merged, never created
    assert tv_norm(nu) == pytest.approx(tv_norm(mu))
