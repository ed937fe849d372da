"""
Multivariate dual certificates built from one-dimensional fits.

Every certificate is a generalized polynomial

    Q(theta) = sum_{m_1..m_d} b[m_1, ..., m_d] prod_i psi^(i)_{m_i}(t^(i))

assembled as a sum of products of univariate fits, so that ``b`` is a sum of
outer products of coefficient vectors. Three constructions are provided:

``noiseless``
    Sum over all assignments of the K atoms to the d axes of products of
    nonnegative polynomials vanishing on the assigned coordinates. Vanishes
    exactly on the support and is positive elsewhere.
``away``
    Same partition sum with factors majorizing the indicator that is 0 near
    the assigned coordinates and 1 elsewhere. Bounded below by
    ``(d - 1) d^(K - 2)`` outside the eps-balls around the support.
``near``
    One product per atom; the sign pattern decides whether the atom's product
    is pushed up to +1 or down towards -1 on its ball.

Builders take a TensorPSF or an explicit list of per-axis function
families. They verify the result on a grid and raise
:class:`CertificateError` when verification fails (unless ``strict=False``).
"""

import itertools
import math

import numpy as np

from .chebyshev import (FunctionFamily, check_t_star, check_t_system,
                        default_t_star_sequences, fit_majorant_polynomial,
                        fit_vanishing_polynomial)
from .measure import indicator_vanishing, indicator_window
from .metrics import g_bar as g_bar_value

VERIFY_TOL = 1e-8


class CertificateError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesisError(ValueError):
    """A structural hypothesis fails: too few samples or a failed family check."""


class Partition:
    """Assignment of atoms ``0..K-1`` to axes; ``parts[i]`` is ``Omega_i``."""

    def __init__(self, assignment, d):
        self.assignment = tuple(int(a) for a in assignment)
        self.parts = tuple(frozenset(k for k, a in enumerate(self.assignment) if a == i)
                           for i in range(d))

    def node_set(self, Theta, i):
        """Coordinates ``{t_k^(i)}`` of the atoms assigned to axis ``i``."""
        ks = sorted(self.parts[i])
        return np.asarray(Theta, dtype=float)[ks, i] if ks else np.zeros(0)

    def __repr__(self):
        return "Partition(" + ", ".join(
            "{" + ",".join(str(k + 1) for k in sorted(p)) + "}" for p in self.parts) + ")"


def enumerate_partitions(K, d):
    """All ``d**K`` assignments of ``K`` atoms to ``d`` axes, lexicographic."""
    for assignment in itertools.product(range(d), repeat=K):
        yield Partition(assignment, d)


# --- certificate container -------------------------------------------------

def _contract(b, mats):
    """``b`` contracted along every axis with the matching ``(n_i, M)`` matrix."""
    out = b
    for Phi in mats:
        # always contract the current leading axis; results stack at the end
        out = np.tensordot(out, Phi, axes=([0], [1]))
    return out


class Certificate:
    """Coefficient tensor plus the univariate factors that generated it.

    Attributes
    ----------
    kind : str
        ``"noiseless"``, ``"away"`` or ``"near"``.
    b : ndarray, shape (M,) * d
    terms : list of list of FittedPolynomial
        ``Q = sum_terms prod_i term[i](t_i)``.
    constants : dict
        ``g_bar`` (away) or ``alpha`` and ``q_max`` (near).
    report : dict
        Verification summary.
    """

    def __init__(self, kind, families, b, terms, constants=None, sign_pattern=None,
                 provenance=None):
        self.kind = kind
        self.families = list(families)
        self.b = np.asarray(b, dtype=float)
        self.terms = terms
        self.constants = dict(constants or {})
        self.sign_pattern = None if sign_pattern is None else tuple(sign_pattern)
        self.provenance = dict(provenance or {})
        self.report = {}

    @property
    def b_norm(self):
        return float(np.linalg.norm(self.b))

    @property
    def dim(self):
        return len(self.families)

    @property
    def M(self):
        return len(self.families[0])

    def evaluate(self, points):
        """``Q`` at scattered points ``(P, d)`` from the coefficient tensor."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mats = [f.matrix(points[:, i]) for i, f in enumerate(self.families)]
        flat = self.b.reshape(self.M, -1)
        out = mats[0] @ flat  # (P, M^(d-1))
        for i in range(1, self.dim):
            out = out.reshape(points.shape[0], self.M, -1)
            out = np.einsum("pmr,pm->pr", out, mats[i])
        return out.reshape(-1)

    def evaluate_factored(self, points):
        """``Q`` at scattered points from the stored univariate factors."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(points.shape[0])
        for term in self.terms:
            prod = np.ones(points.shape[0])
            for i, q in enumerate(term):
                prod *= q(points[:, i])
            total += prod
        return total

    def evaluate_grid(self, axis_nodes):
        """``Q`` on the tensor grid ``axis_nodes[0] x ... x axis_nodes[d-1]``."""
        mats = [f.matrix(g) for f, g in zip(self.families, axis_nodes)]
        return _contract(self.b, mats)

    def to_dict(self):
        return {"kind": self.kind, "shape": list(self.b.shape),
                "coefficients": self.b.ravel().tolist(), "b_norm": self.b_norm,
                "constants": self.constants,
                "sign_pattern": None if self.sign_pattern is None else list(self.sign_pattern),
                "provenance": self.provenance, "verification": self.report}


# --- target functions --------------------------------------------------------

class TargetFunction:
    """Piecewise constant lower bound a certificate has to dominate.

    ``kind="away"``: 0 on the closed eps-balls, ``g_bar`` elsewhere, with
    equality ``Q = 0`` required at the centers.

    ``kind="near"``: on a ball with sign +1 the value is 1, on a ball with
    sign -1 it is -1 (and ``-1 + alpha`` at the center itself), -1 elsewhere;
    equality is required at the centers. Where balls overlap the larger
    value applies.

    ``kind="noiseless"``: 0 everywhere with equality at the centers.
    """

    def __init__(self, kind, Theta, eps=None, g_bar=None, alpha=None, signs=None):
        self.kind = kind
        self.Theta = np.atleast_2d(np.asarray(Theta, dtype=float))
        self.eps = eps
        self.g_bar = g_bar
        self.alpha = alpha
        self.signs = None if signs is None else np.asarray(signs, dtype=int)
        if kind == "near" and (self.signs is None or self.signs.size != self.Theta.shape[0]):
            raise ValueError("near target needs one sign per atom")

    def equality_values(self):
        K = self.Theta.shape[0]
        if self.kind == "near":
            return np.where(self.signs > 0, 1.0, -1.0 + self.alpha)
        return np.zeros(K)

    def _ball_masks(self, axis_nodes):
        """Per atom, a boolean grid that is True on its closed ball."""
        masks = []
        for theta in self.Theta:
            per_axis = [np.abs(np.asarray(g) - theta[i]) <= self.eps
                        for i, g in enumerate(axis_nodes)]
            m = per_axis[0]
            for v in per_axis[1:]:
                m = np.multiply.outer(m, v)
            masks.append(m)
        return masks

    def on_grid(self, axis_nodes):
        shape = tuple(len(g) for g in axis_nodes)
        if self.kind == "noiseless":
            return np.zeros(shape)
        masks = self._ball_masks(axis_nodes)
        if self.kind == "away":
            inside = np.zeros(shape, dtype=bool)
            for m in masks:
                inside |= m
            return np.where(inside, 0.0, float(self.g_bar))
        out = np.full(shape, -1.0)
        for m, s in zip(masks, self.signs):
            if s > 0:
                out[m] = 1.0
        # centers of negative balls lying on the grid
        for theta, s in zip(self.Theta, self.signs):
            if s < 0:
                idx = [np.flatnonzero(np.asarray(g) == theta[i]) for i, g in enumerate(axis_nodes)]
                if all(ix.size for ix in idx):
                    pos = tuple(int(ix[0]) for ix in idx)
                    if out[pos] < -1.0 + self.alpha:
                        out[pos] = -1.0 + self.alpha
        return out

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "noiseless":
            return np.zeros(points.shape[0])
        dist = np.abs(points[:, None, :] - self.Theta[None, :, :]).max(axis=2)
        inside = dist <= self.eps
        if self.kind == "away":
            return np.where(inside.any(axis=1), 0.0, float(self.g_bar))
        out = np.full(points.shape[0], -1.0)
        out[(inside & (self.signs > 0)[None, :]).any(axis=1)] = 1.0
        center = (dist == 0) & (self.signs < 0)[None, :]
        out = np.where(center.any(axis=1), np.maximum(out, -1.0 + self.alpha), out)
        return out


def _axis_grids(d, grid_n):
    return [np.linspace(0.0, 1.0, grid_n) for _ in range(d)]


def _chunked_slack(cert, target, axis_nodes, chunk=256):
    """Min of ``Q - target`` and max of ``Q`` over the grid, chunked on axis 0."""
    g0 = axis_nodes[0]
    worst, worst_idx, q_max = np.inf, None, -np.inf
    for s in range(0, len(g0), chunk):
        sub = [g0[s:s + chunk]] + list(axis_nodes[1:])
        Q = cert.evaluate_grid(sub)
        slack = Q - target.on_grid(sub)
        i = int(np.argmin(slack))
        if slack.flat[i] < worst:
            worst = float(slack.flat[i])
            loc = np.unravel_index(i, slack.shape)
            worst_idx = [float(sub[a][loc[a]]) for a in range(len(sub))]
        q_max = max(q_max, float(Q.max()))
    return worst, worst_idx, q_max


def verify_certificate(cert, target, grid_n=None, tol=VERIFY_TOL):
    """Scan a ``grid_n^d`` grid plus the support points.

    Returns a report with the minimum of ``Q - target`` (``min_slack``), the
    largest equality residual on the support, and ``pass``.
    """
    d = cert.dim
    if grid_n is None:
        grid_n = {1: 4096, 2: 1024}.get(d, 96)
    axis_nodes = _axis_grids(d, grid_n)
    worst, where, q_max = _chunked_slack(cert, target, axis_nodes)
    Theta = target.Theta
    if Theta.shape[0]:
        at_support = cert.evaluate(Theta)
        eq = np.abs(at_support - target.equality_values())
        support_slack = float((at_support - target(Theta)).min())
        eq_res = float(eq.max())
    else:
        support_slack, eq_res = np.inf, 0.0
    min_slack = min(worst, support_slack)
    return {"kind": target.kind, "grid_n": grid_n, "min_slack": min_slack,
            "witness": where, "equality_residual": eq_res, "q_grid_max": q_max,
            "tol": tol, "pass": bool(min_slack >= -tol and eq_res <= tol)}


# --- hypothesis checks --------------------------------------------------------

def axis_families(psf):
    """Per-axis function families of a TensorPSF (lists pass through)."""
    if isinstance(psf, (list, tuple)):
        return list(psf)
    return [FunctionFamily.translates(c) for c in psf.components]


def check_axes_t_system(psf, trials=100, seed=0):
    return [check_t_system(f, trials, seed) for f in axis_families(psf)]


def t_star_conditions(psf, Theta, eps, K=None, n_schedule=(100, 1000, 10000)):
    """Run the T*-surrogate for every indicator family the noisy bound needs.

    Covers ``F_{T_Omega}`` on every axis and subset, ``F^+`` and ``F^-`` of
    every atom coordinate on every axis (the union of the axis ranges used
    by the two near-support hypotheses). Returns one entry per family and a
    summary of which groups passed.
    """
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float))
    K = Theta.shape[0] if K is None else K
    fams = axis_families(psf)
    M = len(fams[0])
    entries = []
    for i, fam in enumerate(fams):
        for r in range(K + 1):
            for omega in itertools.combinations(range(Theta.shape[0]), r):
                nodes = Theta[list(omega), i]
                F = indicator_vanishing(nodes, eps)
                seqs = default_t_star_sequences(K, eps, M, nodes, n_schedule)
                rep = check_t_star(fam.prepend(F), seqs)
                entries.append({"group": "F_T", "axis": i, "omega": list(omega),
                                "pass": rep["pass"], "report": _brief(rep)})
        for k in range(Theta.shape[0]):
            for sign, group in ((1, "F+"), (-1, "F-")):
                F = indicator_window(Theta[k, i], eps, sign)
                seqs = default_t_star_sequences(K, eps, M, Theta[:, i], n_schedule)
                rep = check_t_star(fam.prepend(F), seqs)
                entries.append({"group": group, "axis": i, "atom": k,
                                "pass": rep["pass"], "report": _brief(rep)})
    d = len(fams)
    summary = {
        "away (F_T, all axes)": all(e["pass"] for e in entries if e["group"] == "F_T"),
        "near F+- axes 1..d-1": all(e["pass"] for e in entries
                                    if e["group"] in ("F+", "F-") and e["axis"] < d - 1),
        "near F+- all axes": all(e["pass"] for e in entries if e["group"] in ("F+", "F-")),
        "near F+ last axis": all(e["pass"] for e in entries
                                 if e["group"] == "F+" and e["axis"] == d - 1),
        "near F+ all axes": all(e["pass"] for e in entries if e["group"] == "F+"),
    }
    return {"entries": entries, "summary": summary, "method": "finite-n surrogate"}


def _brief(rep):
    return {"pass": rep["pass"], "ratio_tol": rep["ratio_tol"],
            "failed_sequences": [
                {"limit_points": s["limit_points"], "positive": s["positive"],
                 "det_witness": s["det_witness"], "same_rate": s["same_rate"]}
                for s in rep["sequences"] if not s["passed"]]}


def _require_M(fams, K, need, what):
    M = len(fams[0])
    if M < need:
        raise HypothesisError(f"{what} needs M >= {need} for K={K}, got M={M}")


# --- builders -----------------------------------------------------------------

def _assemble(fams, terms):
    b = np.zeros((len(fams[0]),) * len(fams))
    for term in terms:
        b += _outer([q.coefficients for q in term])
    return b


def _outer(vectors):
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def _finish(cert, target, strict, verify_n):
    rep = verify_certificate(cert, target, verify_n)
    cert.report.update(rep)
    if strict and not cert.report["pass"]:
        raise CertificateError(f"{cert.kind} certificate failed verification: "
                               f"min slack {rep['min_slack']:.3e}, equality residual "
                               f"{rep['equality_residual']:.3e}", cert.report)
    return cert


def build_noiseless_Q(psf, Theta, grid_n=512, cert_n=None, verify_n=None,
                      check_families=True, positive_floor=1e-3, eps0=0.05, strict=True):
    """Certificate that is nonnegative and vanishes exactly on ``Theta``.

    Each axis factor is a nonnegative polynomial vanishing on the coordinates
    of the atoms assigned to that axis; the products are summed over all
    ``d**K`` assignments. Besides the ``Q >= 0`` / ``Q(theta_k) = 0`` check,
    the report records the minimum of ``Q / max Q`` outside the sup-norm
    neighborhood of radius ``eps0``.
    """
    fams = axis_families(psf)
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float)).reshape(-1, len(fams))
    K, d = Theta.shape
    _require_M(fams, K, 2 * K + 1, "noiseless certificate")
    hyp = {}
    if check_families:
        hyp["t_system"] = [r["pass"] for r in check_axes_t_system(fams)]
        if not all(hyp["t_system"]):
            raise HypothesisError(f"axis families fail the T-system check: {hyp['t_system']}")
    cache = {}

    def factor(i, nodes):
        key = (i, tuple(np.round(nodes, 15)))
        if key not in cache:
            cache[key] = fit_vanishing_polynomial(fams[i], nodes, grid_n, cert_n)
        return cache[key]

    terms, provenance = [], []
    for part in enumerate_partitions(K, d):
        try:
            term = [factor(i, part.node_set(Theta, i)) for i in range(d)]
        except Exception as exc:
            raise CertificateError(f"univariate fit failed for {part}: {exc}") from exc
        terms.append(term)
        provenance.append(repr(part))
    cert = Certificate("noiseless", fams, _assemble(fams, terms), terms,
                       constants={}, provenance={"partitions": provenance,
                                                 "hypotheses": hyp, "fits": len(cache)})
    target = TargetFunction("noiseless", Theta)
    _finish(cert, target, False, verify_n)
    cert.report.update(positivity_report(cert, Theta, verify_n, positive_floor, eps0))
    cert.report["pass"] = bool(cert.report["pass"] and cert.report["positivity_pass"])
    if strict and not cert.report["pass"]:
        raise CertificateError("noiseless certificate failed verification", cert.report)
    return cert


def positivity_report(cert, Theta, grid_n=None, floor=1e-3, eps0=0.05):
    """Smallest ``Q / max Q`` on the grid outside ``Theta``'s eps0-neighborhood."""
    d = cert.dim
    if grid_n is None:
        grid_n = {1: 4096, 2: 1024}.get(d, 96)
    axis_nodes = _axis_grids(d, grid_n)
    g0 = axis_nodes[0]
    worst, q_max, q_min = np.inf, -np.inf, np.inf
    for s in range(0, len(g0), 256):
        sub = [g0[s:s + 256]] + axis_nodes[1:]
        Q = cert.evaluate_grid(sub)
        q_max = max(q_max, float(Q.max()))
        q_min = min(q_min, float(Q.min()))
        near = np.zeros(Q.shape, dtype=bool)
        for theta in Theta:
            m = np.abs(sub[0] - theta[0]) <= eps0
            for i in range(1, d):
                m = np.multiply.outer(m, np.abs(sub[i] - theta[i]) <= eps0)
            near |= m
        if (~near).any():
            worst = min(worst, float(Q[~near].min()))
    ratio = worst / q_max if q_max > 0 else -np.inf
    return {"grid_min": q_min, "grid_max": q_max, "eps0": eps0,
            "min_off_support": worst, "min_off_support_ratio": ratio,
            "positive_floor": floor, "positivity_pass": bool(ratio > floor and q_min >= -VERIFY_TOL)}


def build_away_Q(psf, Theta, eps, grid_n=512, cert_n=None, verify_n=None,
                 waive_t_star=False, check_families=True, strict=True):
    """Certificate with ``Q >= g_bar`` off the eps-balls and ``Q(theta_k) = 0``.

    Per assignment of atoms to axes, axis ``i`` gets a polynomial majorizing
    ``F_{T_Omega_i}`` (0 within eps of an assigned coordinate, 1 elsewhere)
    with equality at the assigned coordinates. ``g_bar = (d-1) d^(K-2)``
    (``1`` in one dimension).
    """
    fams = axis_families(psf)
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float)).reshape(-1, len(fams))
    K, d = Theta.shape
    _require_M(fams, K, 2 * K + 2, "away certificate")
    hyp = {"t_star_waived": bool(waive_t_star)}
    if check_families:
        hyp["t_system"] = [r["pass"] for r in check_axes_t_system(fams)]
        if not all(hyp["t_system"]):
            raise HypothesisError(f"axis families fail the T-system check: {hyp['t_system']}")
    if not waive_t_star:
        failed = []
        for i, fam in enumerate(fams):
            for r in range(K + 1):
                for omega in itertools.combinations(range(K), r):
                    nodes = Theta[list(omega), i]
                    seqs = default_t_star_sequences(K, eps, len(fams[0]), nodes)
                    rep = check_t_star(fam.prepend(indicator_vanishing(nodes, eps)), seqs)
                    if not rep["pass"]:
                        failed.append((i, list(omega)))
        hyp["t_star_failed"] = failed
        if failed:
            raise HypothesisError(f"T*-surrogate fails for (axis, Omega) {failed}")
    cache = {}

    def factor(i, nodes):
        key = (i, tuple(np.round(nodes, 15)))
        if key not in cache:
            cache[key] = fit_majorant_polynomial(
                fams[i], indicator_vanishing(nodes, eps), nodes, grid_n, cert_n)
        return cache[key]

    terms, provenance = [], []
    for part in enumerate_partitions(K, d):
        try:
            term = [factor(i, part.node_set(Theta, i)) for i in range(d)]
        except Exception as exc:
            raise CertificateError(f"univariate fit failed for {part}: {exc}") from exc
        terms.append(term)
        provenance.append(repr(part))
    gb = g_bar_value(d, K)
    consts = {"g_bar": gb}
    if d == 1:
        consts["note"] = "g_bar set to 1 in one dimension"
    cert = Certificate("away", fams, _assemble(fams, terms), terms, constants=consts,
                       provenance={"partitions": provenance, "eps": eps,
                                   "hypotheses": hyp, "fits": len(cache)})
    return _finish(cert, TargetFunction("away", Theta, eps, g_bar=gb), strict, verify_n)


def near_unit_factors(psf, Theta, eps, grid_n=512, cert_n=None):
    """Unit-scale fits shared by all sign patterns.

    Returns ``{(axis, k, sign): FittedPolynomial}`` for ``F^+`` on every
    axis and ``F^-`` on axes ``0..d-2``. Each fit majorizes its window
    indicator with equality at all atom coordinates of that axis; the LP is
    homogeneous in the target, so scaled targets are handled by scaling.
    """
    fams = axis_families(psf)
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float)).reshape(-1, len(fams))
    K, d = Theta.shape
    out = {}
    for i in range(d):
        for k in range(K):
            signs = (1, -1) if i < d - 1 else (1,)
            for s in signs:
                F = indicator_window(Theta[k, i], eps, s)
                out[(i, k, s)] = fit_majorant_polynomial(fams[i], F, Theta[:, i],
                                                         grid_n, cert_n)
    return out


def q_max_value(unit, pattern, d, eps):
    """``eps^-(d-1) max_{k: pi_k=-1} max_t q_k^(d)(t)``, or 1 with no negative sign."""
    neg = [k for k, s in enumerate(pattern) if s < 0]
    if not neg:
        return 1.0
    # the eps^(d-1) scaling of the last-axis factor cancels
    return float(max(unit[(d - 1, k, 1)].info["max_value"] for k in neg))


def alpha_value(d, q_max):
    return 1.0 + (-1.0) ** (d - 1) / q_max


def build_near_Q0(psf, Theta, eps, sign_pattern, grid_n=512, cert_n=None, verify_n=None,
                  unit_factors=None, waive_t_star=False, strict=True):
    """Near-support certificate for one sign pattern.

    For atom ``k`` the last-axis factor majorizes ``F^+`` (scaled by
    ``eps^(d-1)`` when the sign is -1); the other axes majorize ``F^+`` for
    sign +1 and ``F^- / (eps * q_max)`` for sign -1. ``Q0`` is the sum over
    atoms of the per-atom products and ``alpha = 1 + (-1)^(d-1) / q_max``.
    """
    fams = axis_families(psf)
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float)).reshape(-1, len(fams))
    K, d = Theta.shape
    pattern = tuple(int(s) for s in sign_pattern)
    if len(pattern) != K or any(s not in (1, -1) for s in pattern):
        raise ValueError(f"sign pattern must have {K} entries in {{+1, -1}}")
    _require_M(fams, K, 2 * K + 2, "near certificate")
    hyp = {"t_star_waived": bool(waive_t_star)}
    if not waive_t_star:
        tc = t_star_conditions(fams, Theta, eps, K)
        hyp["t_star_summary"] = tc["summary"]
        if not (tc["summary"]["near F+- axes 1..d-1"] and tc["summary"]["near F+ last axis"]):
            raise HypothesisError(f"T*-surrogate fails for near-support families: {tc['summary']}")
    unit = unit_factors or near_unit_factors(fams, Theta, eps, grid_n, cert_n)
    q_max = q_max_value(unit, pattern, d, eps)
    alpha = alpha_value(d, q_max)
    terms = []
    for k, s in enumerate(pattern):
        term = []
        for i in range(d - 1):
            if s > 0:
                term.append(unit[(i, k, 1)])
            else:
                term.append(unit[(i, k, -1)].scaled(1.0 / (eps * q_max)))
        last = unit[(d - 1, k, 1)]
        term.append(last if s > 0 else last.scaled(eps ** (d - 1)))
        terms.append(term)
    consts = {"alpha": alpha, "q_max": q_max}
    cert = Certificate("near", fams, _assemble(fams, terms), terms, constants=consts,
                       sign_pattern=pattern,
                       provenance={"eps": eps, "hypotheses": hyp,
                                   "note": "signed last-axis factors"})
    target = TargetFunction("near", Theta, eps, alpha=alpha, signs=pattern)
    return _finish(cert, target, strict, verify_n)


def build_near_family(psf, Theta, eps, patterns=None, strict=True, **kw):
    """Near-support certificates for several sign patterns (default: all ``2^K``)."""
    fams = axis_families(psf)
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float)).reshape(-1, len(fams))
    K = Theta.shape[0]
    if patterns is None:
        if K > 12:
            raise ValueError("enumerating all sign patterns is limited to K <= 12")
        patterns = list(itertools.product((1, -1), repeat=K))
    grid_n = kw.pop("grid_n", 512)
    cert_n = kw.pop("cert_n", None)
    unit = near_unit_factors(fams, Theta, eps, grid_n, cert_n)
    return {tuple(p): build_near_Q0(psf, Theta, eps, p, grid_n=grid_n, cert_n=cert_n,
                                    unit_factors=unit, strict=strict, **kw)
            for p in patterns}


# --- product inequalities over compositions and partitions ---------------------

def _compositions(l):
    """Ordered compositions of ``l`` into positive parts."""
    if l == 0:
        yield ()
        return
    for first in range(1, l + 1):
        for rest in _compositions(l - first):
            yield (first,) + rest


def _partitions(n, max_part=None):
    """Integer partitions of ``n`` as nonincreasing tuples."""
    max_part = n if max_part is None else max_part
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def partition_inequality_oracle(d, max_l=None):
    """Exhaustively check the two counting inequalities behind ``g_bar``.

    * for ``1 <= l < d`` and every composition ``a_1 + ... + a_p = l``:
      ``(d - l) d^(p-1) <= prod (d - a_i)``;
    * for every partition ``a_1 + ... + a_p = d`` with ``p >= 3``:
      ``prod (d - a_i) >= (d - 1) d^(p-2)``.

    Returns the case counts with any violations. ``tightest_ratio`` is the
    largest ``rhs / lhs`` seen (``<= 1`` means the inequality holds).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    max_l = d - 1 if max_l is None else min(max_l, d - 1)
    n_compositions = n_partitions = 0
    violations = []
    tight = 0.0
    for l in range(1, max_l + 1):
        for comp in _compositions(l):
            p = len(comp)
            lower = (d - l) * d ** (p - 1)
            prod = math.prod(d - a for a in comp)
            n_compositions += 1
            if prod > 0:
                tight = max(tight, lower / prod)
            if lower > prod:
                violations.append(("composition", d, comp, lower, prod))
    for part in _partitions(d):
        if len(part) < 3:
            continue
        p = len(part)
        prod = math.prod(d - a for a in part)
        lower = (d - 1) * d ** (p - 2)
        n_partitions += 1
        if prod > 0:
            tight = max(tight, lower / prod)
        if prod < lower:
            violations.append(("partition", d, part, lower, prod))
    return {"d": d, "composition_cases": n_compositions, "partition_cases": n_partitions,
            "violations": violations, "tightest_ratio": tight,
            "pass": not violations}
