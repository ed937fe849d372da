import numpy as np
import pytest

from superres import certificates as C
from superres.chebyshev import FunctionFamily
from superres.psf import TensorPSF

THETA2 = np.array([[19 / 63, 44 / 63], [44 / 63, 19 / 63]])


@pytest.fixture(scope="module")
def away_2d():
    return C.build_away_Q(TensorPSF.gaussian(2, 6, 0.1), THETA2, 0.1, verify_n=256)


@pytest.fixture(scope="module")
def near_2d():
    return C.build_near_family(TensorPSF.gaussian(2, 6, 0.1), THETA2, 0.1, verify_n=256,
                               waive_t_star=True)


def test_partitions():
    assert [p.assignment for p in C.enumerate_partitions(0, 3)] == [()]
    parts = [p.parts for p in C.enumerate_partitions(2, 2)]
    assert parts == [({0, 1}, set()), ({0}, {1}), ({1}, {0}), (set(), {0, 1})]
    assert len(list(C.enumerate_partitions(3, 3))) == 27


def test_noiseless_monomial():
    q = C.build_noiseless_Q([FunctionFamily.monomials(3)], [[0.5]])
    np.testing.assert_allclose(q.b / q.b[2], [0.25, -1.0, 1.0], atol=1e-8)
    assert q.report["pass"]


def test_noiseless_no_atoms_is_positive():
    q = C.build_noiseless_Q(TensorPSF.gaussian(2, 5, 0.1), np.zeros((0, 2)), verify_n=128)
    assert q.report["grid_min"] > 0


def test_noiseless_gaussian_2d():
    q = C.build_noiseless_Q(TensorPSF.gaussian(2, 5, 0.1), THETA2, verify_n=512)
    assert q.report["pass"]
    assert q.report["min_off_support"] > 0
    assert np.abs(q.evaluate(THETA2)).max() <= 1e-8


def test_noiseless_needs_enough_samples():
    with pytest.raises(C.HypothesisError):
        C.build_noiseless_Q(TensorPSF.gaussian(2, 4, 0.1), THETA2)


def test_tensor_and_factored_evaluation_agree(away_2d):
    pts = np.random.default_rng(0).random((100, 2))
    a, b = away_2d.evaluate(pts), away_2d.evaluate_factored(pts)
    assert np.all(np.abs(a - b) <= 1e-9 * (1 + np.abs(a)))


def test_away_floor(away_2d):
    assert away_2d.constants["g_bar"] == 1.0
    assert away_2d.report["pass"]
    assert away_2d.provenance["hypotheses"]["t_star_failed"] == []
    target = C.TargetFunction("away", THETA2, 0.1, g_bar=1.0)
    grid = [np.linspace(0, 1, 200)] * 2
    Q, G = away_2d.evaluate_grid(grid), target.on_grid(grid)
    assert Q[G > 0].min() >= 1.0 - 1e-6
    assert Q.min() >= -1e-8


def test_verify_detects_perturbation(away_2d):
    target = C.TargetFunction("away", THETA2, 0.1, g_bar=1.0)
    bad = C.Certificate("away", away_2d.families, away_2d.b.copy(), away_2d.terms)
    bad.b[0, 0] += 1.0
    rep = C.verify_certificate(bad, target, 128)
    assert not rep["pass"] and rep["equality_residual"] > 1e-8
    doubled = C.TargetFunction("away", THETA2, 0.1, g_bar=2.0)
    rep = C.verify_certificate(away_2d, doubled, 128)
    assert not rep["pass"] and rep["min_slack"] < 0


def test_near_patterns(near_2d):
    assert set(near_2d) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    for pattern, cert in near_2d.items():
        assert cert.report["pass"], pattern
        assert cert.sign_pattern == pattern
    # no negative signs: q_max = 1 and alpha = 1 + (-1)^(d-1) = 0 in two dimensions
    assert near_2d[(1, 1)].constants == {"alpha": 0.0, "q_max": 1.0}
    alpha = near_2d[(1, -1)].constants["alpha"]
    q_max = near_2d[(1, -1)].constants["q_max"]
    assert q_max >= 1 and alpha == pytest.approx(1 - 1 / q_max)


def test_near_value_at_centers(near_2d):
    cert = near_2d[(1, -1)]
    q_max = cert.constants["q_max"]
    np.testing.assert_allclose(cert.evaluate(THETA2), [1.0, -1.0 / q_max], atol=1e-8)


def test_near_pattern_validation():
    with pytest.raises(ValueError):
        C.build_near_Q0(TensorPSF.gaussian(2, 6, 0.1), THETA2, 0.1, (1,), waive_t_star=True)


def test_near_without_waiver_reports_t_star():
    with pytest.raises(C.HypothesisError, match="T\\*"):
        C.build_near_Q0(TensorPSF.gaussian(2, 6, 0.1), THETA2, 0.1, (1, -1))


def test_target_near_values():
    t = C.TargetFunction("near", THETA2, 0.1, alpha=0.25, signs=[1, -1])
    vals = t(np.vstack([THETA2, [[0.05, 0.05]], THETA2[1] + 0.05]))
    np.testing.assert_allclose(vals, [1.0, -0.75, -1.0, -1.0])
    grid = [np.linspace(0, 1, 64)] * 2
    assert t.on_grid(grid)[19, 44] == 1.0
    assert t.on_grid(grid)[44, 19] == -0.75


def test_certificate_json(away_2d):
    obj = away_2d.to_dict()
    assert obj["kind"] == "away" and obj["shape"] == [6, 6]
    assert len(obj["coefficients"]) == 36
    assert obj["verification"]["pass"]


@pytest.mark.parametrize("d", range(2, 8))
def test_partition_inequalities(d):
    rep = C.partition_inequality_oracle(d)
    assert rep["pass"] and rep["violations"] == []
    assert rep["composition_cases"] == 2 ** (d - 1) - 1
