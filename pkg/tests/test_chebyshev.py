import itertools

import numpy as np
import pytest

from superres.chebyshev import (FunctionFamily, check_t_star, check_t_system,
                                collocation_det, default_t_star_sequences,
                                fit_majorant_polynomial, fit_vanishing_polynomial,
                                generate_admissible)
from superres.measure import indicator_vanishing, indicator_window
from superres.psf import TensorPSF


def _gauss_family(M=5, sigma=0.1):
    return FunctionFamily.translates(TensorPSF.gaussian(1, M, sigma).components[0])


def test_monomials_pass():
    rep = check_t_system(FunctionFamily.monomials(3), trials=30)
    assert rep["pass"] and rep["sign"] == 1.0


def test_vandermonde_determinants():
    fam = FunctionFamily.monomials(4)
    rep = check_t_system(fam, trials=20, seed=3)
    for tau, det in zip(rep["sequences"], rep["dets"]):
        exact = np.prod([tau[j] - tau[i] for i, j in itertools.combinations(range(4), 2)])
        assert det == pytest.approx(exact, rel=1e-10)


def test_dependent_family_fails():
    fam = FunctionFamily([lambda t: np.asarray(t, float), lambda t: 2 * np.asarray(t, float)],
                         ["t", "2t"])
    rep = check_t_system(fam, trials=20)
    assert not rep["pass"]
    assert all(d == 0 for d in rep["dets"])


def test_gaussian_translates_pass():
    rep = check_t_system(_gauss_family(5, 0.1), trials=100, seed=0)
    assert rep["pass"] and rep["trials"] >= 100


def test_collocation_det_sign():
    s, rel, det = collocation_det(FunctionFamily.monomials(2), [0.2, 0.7])
    assert s == 1.0 and det == pytest.approx(0.5)
    s, _, _ = collocation_det(FunctionFamily.monomials(2), [0.7, 0.2])
    assert s == -1.0


def test_admissible_construction():
    seq = generate_admissible(1, 0.1, 4, [(0.3, 2), (0.6, 1)], [10, 100, 1000])
    for n in (10, 100):
        np.testing.assert_allclose(seq.nodes(n),
                                   [0.0, 0.3 - 1 / (2 * n), 0.3 + 1 / (2 * n), 0.6, 1.0])
    assert seq.odd_row(100) == 3
    for n, tau in seq.realized.items():
        assert tau[0] == 0 and tau[-1] == 1 and np.all(np.diff(tau) > 0)


def test_admissible_rejections():
    # five sample functions leave four interior nodes: no valid split with one odd point
    with pytest.raises(ValueError, match="total M - 1"):
        generate_admissible(2, 0.1, 5, [(0.3, 2), (0.6, 1)], [10, 100, 1000])
    with pytest.raises(ValueError, match="even"):
        generate_admissible(2, 0.1, 5, [(0.3, 3), (0.6, 1)], [10, 100, 1000])
    with pytest.raises(ValueError, match="separated"):
        generate_admissible(1, 0.2, 4, [(0.3, 2), (0.4, 1)], [10, 100, 1000])
    with pytest.raises(ValueError, match="exactly one"):
        generate_admissible(2, 0.1, 7, [(0.3, 2), (0.5, 2), (0.7, 1), (0.9, 1)], [10, 100])


def test_t_star_gaussian_vanishing_indicator():
    fam = _gauss_family(6).prepend(indicator_vanishing([0.3, 0.7], 0.1))
    seqs = default_t_star_sequences(2, 0.1, 6, [0.3, 0.7])
    rep = check_t_star(fam, seqs)
    assert rep["pass"] and rep["ratio_tol"] == 0.05
    assert rep["method"] == "finite-n surrogate"


def test_t_star_gaussian_window_indicator():
    fam = _gauss_family(6).prepend(indicator_window(0.3, 0.1, 1))
    rep = check_t_star(fam, default_t_star_sequences(2, 0.1, 6, [0.3, 0.7]))
    assert rep["pass"]


def test_t_star_zero_ratio_tol_fails():
    fam = _gauss_family(6).prepend(indicator_vanishing([0.3, 0.7], 0.1))
    rep = check_t_star(fam, default_t_star_sequences(2, 0.1, 6, [0.3, 0.7]), ratio_tol=0.0)
    assert not rep["pass"]


def test_t_star_reports_negative_determinant():
    F = indicator_window(0.3, 0.1, -1)
    fam = _gauss_family(4).prepend(F)
    rep = check_t_star(fam, default_t_star_sequences(1, 0.1, 4, [0.3]))
    failing = [s for s in rep["sequences"] if not s["positive"]]
    assert not rep["pass"] and failing
    n, value = failing[0]["det_witness"]
    assert n in failing[0]["n_schedule"] and value <= 0


def test_t_star_short_schedule():
    seq = generate_admissible(1, 0.1, 4, [(0.3, 2), (0.7, 1)], [10, 100])
    fam = _gauss_family(4).prepend(indicator_vanishing([0.3], 0.1))
    with pytest.raises(ValueError, match="schedule too short"):
        check_t_star(fam, [seq])


def test_vanishing_fit_monomial_square():
    q = fit_vanishing_polynomial(FunctionFamily.monomials(3), [0.5])
    np.testing.assert_allclose(q.coefficients / q.coefficients[2], [0.25, -1.0, 1.0],
                               atol=1e-8)


def test_vanishing_fit_empty_nodes():
    q = fit_vanishing_polynomial(FunctionFamily.monomials(3), [])
    np.testing.assert_allclose(q(np.linspace(0, 1, 11)), 1.0, atol=1e-12)


def test_vanishing_fit_gaussian():
    fam = _gauss_family(5)
    q = fit_vanishing_polynomial(fam, [0.3, 0.7])
    fine = np.linspace(0, 1, 20001)
    v = q(fine)
    assert v.min() >= -1e-9
    assert abs(q(0.3)[0]) <= 1e-9 and abs(q(0.7)[0]) <= 1e-9
    # no other zeros: the only near-zero stretches sit at the nodes
    small = fine[v < 1e-6 * v.max()]
    assert np.all(np.minimum(abs(small - 0.3), abs(small - 0.7)) <= 1e-2)
    with pytest.raises(ValueError):
        fit_vanishing_polynomial(FunctionFamily.monomials(2), [0.5])


def test_majorant_zero_target_reduces_to_vanishing():
    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    q = fit_majorant_polynomial(FunctionFamily.monomials(3), zero, [0.5])
    np.testing.assert_allclose(q.coefficients / q.coefficients[2], [0.25, -1.0, 1.0],
                               atol=1e-6)


def test_majorant_vanishing_indicator():
    fam = _gauss_family(6)
    F = indicator_vanishing([0.5], 0.1)
    q = fit_majorant_polynomial(fam, F, [0.5])
    fine = np.linspace(0, 1, 40001)
    v = q(fine)
    assert (v - F(fine)).min() >= -1e-9
    outside = np.abs(fine - 0.5) > 0.1
    assert v[outside].min() >= 1 - 1e-9
    assert abs(q(0.5)[0]) <= 1e-9


def test_majorant_negative_window():
    fam = _gauss_family(6)
    F = indicator_window(0.5, 0.1, -1)
    q = fit_majorant_polynomial(fam, F, [0.5])
    fine = np.linspace(0, 1, 40001)
    assert (q(fine) - F(fine)).min() >= -1e-9
    assert q(0.5)[0] == pytest.approx(-1.0, abs=1e-9)
