"""
Numerical checks of Tchebychev-system properties and constructive
one-dimensional polynomial fits.

A "polynomial" over a function family ``{phi_m}`` is any linear combination
``q = sum_m b_m phi_m``. Two fits are provided, both solved as small dense
linear programs on a grid and then certified on a finer grid:

* :func:`fit_vanishing_polynomial`: ``q >= 0`` with double zeros exactly
  at a prescribed node set;
* :func:`fit_majorant_polynomial`: ``q >= F`` for a piecewise constant
  target ``F`` with equality at prescribed nodes.

Grid constraints leave gaps between grid points, so both fits run an
exchange loop: points of the certification grid that violate the
constraint are added to the LP and the fit is repeated.

The T-system and T*-system checks are randomized falsifiers. A pass means
no counterexample was found among the sequences tried, nothing more.
"""

import numpy as np
import mpmath
from scipy.optimize import linprog

from .psf import ComponentPSF

FIT_GRID = 512
DERIV_STEP = 1e-4
CERT_TOL = 1e-9
LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10,
              "dual_feasibility_tolerance": 1e-10,
              "presolve": True}


class FitError(RuntimeError):
    """The linear program for a polynomial fit is infeasible or failed."""


class CertificationError(RuntimeError):
    """A fitted polynomial violates its constraint on the certification grid."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FunctionFamily:
    """Ordered list of scalar functions on ``[0, 1]``.

    Parameters
    ----------
    functions : list of callable
        Vectorized ``t -> phi(t)``.
    labels : list of str, optional
    evaluator : callable, optional
        Fast ``t -> (len(t), m)`` collocation matrix; defaults to stacking
        the individual functions.
    """

    def __init__(self, functions, labels=None, evaluator=None, mp_evaluator=None):
        functions = list(functions)
        if not functions:
            raise ValueError("a family needs at least one function")
        self.functions = functions
        self.labels = list(labels) if labels is not None else [
            f"phi_{j}" for j in range(len(functions))]
        self._evaluator = evaluator
        self._mp_evaluator = mp_evaluator

    @classmethod
    def translates(cls, component):
        """The ``M`` translates ``t -> psi(x_m - t)`` of one PSF axis."""
        if not isinstance(component, ComponentPSF):
            raise TypeError("expected a ComponentPSF")
        fns = [component.function(m) for m in range(component.M)]
        labels = [f"psi{component.axis}_{m}" for m in range(component.M)]
        mp_eval = component.translates_mp if hasattr(component.kernel, "mp") else None
        return cls(fns, labels, evaluator=component.translates, mp_evaluator=mp_eval)

    @classmethod
    def monomials(cls, m):
        fns = [(lambda t, p=p: np.asarray(t, dtype=float) ** p) for p in range(m)]
        return cls(fns, [f"t^{p}" for p in range(m)])

    def __len__(self):
        return len(self.functions)

    def matrix(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self._evaluator is not None:
            return np.asarray(self._evaluator(t), dtype=float)
        return np.stack([np.broadcast_to(f(t), t.shape) for f in self.functions], axis=1)

    def matrix_mp(self, t):
        """Collocation matrix as an mpmath matrix.

        Uses the exact high-precision evaluator when one is available,
        otherwise the double precision values.
        """
        if self._mp_evaluator is not None:
            return mpmath.matrix(self._mp_evaluator(list(t)))
        return mpmath.matrix(self.matrix(t).tolist())

    def prepend(self, F, label=None):
        """Family ``{F} u self`` with the indicator in front."""
        base = self

        def evaluator(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.column_stack([F(t), base.matrix(t)])

        mp_eval = None
        if self._mp_evaluator is not None:
            def mp_eval(t):
                rows = base._mp_evaluator(t)
                f = F(np.asarray(t, dtype=float))
                return [[mpmath.mpf(float(fi))] + list(r) for fi, r in zip(f, rows)]

        return FunctionFamily([F] + self.functions,
                              [label or getattr(F, "label", "F")] + self.labels,
                              evaluator=evaluator, mp_evaluator=mp_eval)


# --- T-system falsifier -----------------------------------------------------

def _structured_sequences(m):
    seqs = [np.linspace(0.0, 1.0, m), (np.arange(m) + 0.5) / m]
    if m >= 2:
        centers = np.linspace(0.0, 1.0, (m + 1) // 2 + 2)[1:-1]
        pts = np.sort(np.concatenate([centers - 1e-3, centers + 1e-3]))[:m]
        if pts.size == m:
            seqs.append(np.clip(pts, 0.0, 1.0))
        seqs.append(np.linspace(0.0, 0.05, m))
        seqs.append(np.linspace(0.95, 1.0, m))
    return seqs


def mp_det(A):
    """Determinant by partial-pivoting elimination, no singularity cutoff.

    ``mpmath.det`` treats tiny pivots as zero; collocation matrices of
    crowded nodes legitimately have determinants far below that cutoff.
    """
    n = A.rows
    U = A.copy()
    det = mpmath.mpf(1)
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(U[i, k]))
        if U[p, k] == 0:
            return mpmath.mpf(0)
        if p != k:
            for j in range(n):
                U[k, j], U[p, j] = U[p, j], U[k, j]
            det = -det
        det *= U[k, k]
        for i in range(k + 1, n):
            f = U[i, k] / U[k, k]
            if f != 0:
                for j in range(k + 1, n):
                    U[i, j] -= f * U[k, j]
    return det


def collocation_det(fam, tau, dps=50):
    """Sign, Hadamard-normalized magnitude and raw determinant of ``[phi_j(tau_i)]``.

    Evaluated in ``dps``-digit arithmetic and repeated with 30 more digits;
    a sign that changes between the two is reported as 0 (unresolved).
    Entries come from the family's high-precision evaluator when it has one.
    """
    vals = []
    for digits in (dps, dps + 30):
        with mpmath.workdps(digits):
            A = fam.matrix_mp(tau)
            det = mp_det(A)
            rows = [mpmath.norm(A[i, :]) for i in range(A.rows)]
            if det == 0 or any(r == 0 for r in rows):
                return 0.0, 0.0, 0.0
            vals.append((mpmath.sign(det), abs(det) / mpmath.fprod(rows), det))
    if vals[0][0] != vals[1][0]:
        return 0.0, 0.0, 0.0
    sign, rel, det = vals[1]
    return float(sign), float(rel), float(det)


def check_t_system(fam, trials=100, seed=0, tol=0.0, dps=50):
    """Randomized search for an increasing sequence with a singular collocation matrix.

    ``trials`` random increasing sequences plus a few structured ones
    (uniform, clustered pairs, crowded near the ends) are tried. The family
    passes when every determinant has Hadamard-normalized magnitude above
    ``tol`` and all determinants share one sign. Determinants are computed
    in ``dps``-digit arithmetic so that the sign is trustworthy even for
    badly conditioned collocation matrices.

    Returns
    -------
    dict
        ``pass``, ``sign``, ``min_abs_det`` (normalized), ``witness`` (the
        sequence with the smallest normalized determinant), ``dets`` (raw).
    """
    m = len(fam)
    rng = np.random.default_rng(seed)
    seqs = _structured_sequences(m)
    while len(seqs) < trials + 5:
        tau = np.sort(rng.random(m))
        if np.all(np.diff(tau) > 0):
            seqs.append(tau)
    signs, rels, dets = [], [], []
    for tau in seqs:
        s, rel, det = collocation_det(fam, tau, dps)
        signs.append(s)
        rels.append(rel)
        dets.append(det)
    worst = int(np.argmin(rels))
    nonzero = [s for s in signs if s != 0]
    consistent = len(set(nonzero)) == 1 and len(nonzero) == len(signs)
    ok = bool(consistent and min(rels) > tol)
    return {"pass": ok, "sign": nonzero[0] if consistent else 0.0,
            "min_abs_det": float(min(rels)), "witness": seqs[worst].tolist(),
            "dets": dets, "sequences": [s.tolist() for s in seqs],
            "trials": len(seqs), "tol": tol, "labels": fam.labels,
            "method": "randomized falsifier"}


# --- admissible sequences and the T* surrogate ------------------------------

class AdmissibleSequence:
    """Node sequences ``0 = tau_0 < ... < tau_M = 1`` collapsing onto a limit multiset.

    Each limit point of even multiplicity ``2j`` is realized at step ``n`` by
    ``2j`` nodes spaced ``1/n`` apart and centered on the point (so a pair
    sits at distance ``1/(2n)`` on either side); the single point of
    multiplicity one is kept fixed.
    """

    def __init__(self, K, eps, M, limit_points, n_schedule):
        self.K, self.eps, self.M = int(K), float(eps), int(M)
        self.limit_points = [(float(p), int(k)) for p, k in limit_points]
        self.n_schedule = [int(n) for n in n_schedule]
        self.odd_point = next(p for p, k in self.limit_points if k == 1)

    def nodes(self, n):
        pts = []
        for p, mult in self.limit_points:
            offsets = (np.arange(mult) - (mult - 1) / 2.0) / n
            pts.extend(p + offsets)
        interior = np.sort(np.array(pts))
        return np.concatenate([[0.0], interior, [1.0]])

    def odd_row(self, n):
        """Row index (within ``nodes(n)``) of the multiplicity-one point."""
        return int(np.flatnonzero(self.nodes(n) == self.odd_point)[0])

    @property
    def realized(self):
        return {n: self.nodes(n) for n in self.n_schedule}


def generate_admissible(K, eps, M, limit_spec, n_schedule):
    """Build a (K, eps)-admissible sequence from ``(point, multiplicity)`` pairs.

    The interior multiset has ``M - 1`` elements: exactly one point of
    multiplicity one and at most ``K`` further points of even multiplicity,
    all pairwise at least ``eps`` apart. Every scheduled ``n`` must keep the
    realized nodes strictly increasing inside ``(0, 1)``.
    """
    if M < 2 * K + 1:
        raise ValueError("need M >= 2K + 1")
    spec = [(float(p), int(k)) for p, k in limit_spec]
    mults = [k for _, k in spec]
    if sum(mults) != M - 1:
        raise ValueError(f"multiplicities must total M - 1 = {M - 1}, got {sum(mults)}")
    if mults.count(1) != 1:
        raise ValueError("exactly one limit point must have multiplicity one")
    odd_others = [k for k in mults if k != 1 and k % 2]
    if odd_others or any(k < 1 for k in mults):
        raise ValueError("all other multiplicities must be even and positive")
    if sum(1 for k in mults if k % 2 == 0) > K:
        raise ValueError("more than K collapsing limit points")
    pts = np.sort([p for p, _ in spec])
    if pts.size > 1 and np.diff(pts).min() < eps - 1e-12:
        raise ValueError("limit points are not eps-separated")
    if np.any(pts <= 0) or np.any(pts >= 1):
        raise ValueError("limit points must lie in the open interval (0, 1)")
    sched = sorted(int(n) for n in n_schedule)
    seq = AdmissibleSequence(K, eps, M, spec, sched)
    for n in sched:
        tau = seq.nodes(n)
        if not (np.all(np.diff(tau) > 0) and tau.size == M + 1):
            raise ValueError(f"nodes are not strictly increasing at n={n}")
    return seq


def _row_minors(A, l):
    n = A.rows
    rows = [i for i in range(n) if i != l]
    out = []
    for m in range(A.cols):
        cols = [j for j in range(A.cols) if j != m]
        sub = mpmath.matrix([[A[i, j] for j in cols] for i in rows])
        out.append(mp_det(sub))
    return out


def check_t_star(fam_with_indicator, seqs, ratio_tol=0.05, dps=50, zero_rel=1e-30):
    """Finite-n surrogate of the T*-system conditions.

    For each admissible sequence:

    (a) the ``(M+1) x (M+1)`` determinant ``[phi_m(tau_k^n)]`` must be
        positive at the two largest scheduled ``n``;
    (b) along the row of the multiplicity-one point, the per-step decay
        ratios ``|minor_m(n_{j+1})| / |minor_m(n_j)|`` of all non-vanishing
        minors must agree to relative ``ratio_tol`` at the last step and the
        normalized minor vector must be stable between the last two steps.
        Both comparisons are strict, so ``ratio_tol=0`` never passes.

    Determinants are evaluated in ``dps``-digit arithmetic (with exact
    kernel values when the family provides them). The true condition is a limit ``n -> infinity``; this
    is a check at finitely many ``n`` only.
    """
    results = []
    for seq in seqs:
        sched = seq.n_schedule
        if len(sched) < 3:
            raise ValueError("schedule too short: need at least 3 n values")
        diag = {"limit_points": seq.limit_points, "n_schedule": sched}
        with mpmath.workdps(dps):
            dets, minors = {}, {}
            for n in sched:
                tau = seq.nodes(n)
                A = fam_with_indicator.matrix_mp(tau)
                if (A.rows, A.cols) != (seq.M + 1, seq.M + 1):
                    raise ValueError("family size must be M + 1")
                dets[n] = mp_det(A)
                minors[n] = _row_minors(A, seq.odd_row(n))
            last, prev, prev2 = sched[-1], sched[-2], sched[-3]
            positive = all(dets[n] > 0 for n in (prev, last))
            scale = max(abs(v) for v in minors[last])
            alive = [m for m in range(len(minors[last]))
                     if scale > 0 and abs(minors[last][m]) > zero_rel * scale]

            def rates(a, b):
                return [float(abs(minors[b][m]) / abs(minors[a][m]))
                        if minors[a][m] != 0 else float("inf") for m in alive]

            r_last = rates(prev, last)
            r_prev = rates(prev2, prev)
            if alive and all(np.isfinite(r_last)):
                ref = float(np.median(r_last))
                spread = max(abs(r - ref) for r in r_last) / ref if ref > 0 else np.inf
            else:
                ref, spread = 0.0, np.inf
            v_last = np.array([float(minors[last][m] / scale) for m in alive])
            scale_prev = max(abs(minors[prev][m]) for m in alive) if alive else 0
            v_prev = (np.array([float(minors[prev][m] / scale_prev) for m in alive])
                      if scale_prev else np.full(len(alive), np.inf))
            drift = float(np.max(np.abs(v_last - v_prev))) if alive else np.inf
            same_rate = bool(alive and spread < ratio_tol and drift < ratio_tol)
        det_fail = None if positive else next(
            (n, float(dets[n])) for n in (prev, last) if not dets[n] > 0)
        diag.update(
            dets={int(n): float(dets[n]) for n in sched},
            positive=positive, det_witness=det_fail, decay_rates=r_last,
            decay_rates_prev=r_prev, rate_spread=float(spread), minor_drift=drift,
            vanishing_minors=[m for m in range(seq.M + 1) if m not in alive],
            same_rate=same_rate, passed=bool(positive and same_rate))
        results.append(diag)
    return {"pass": all(r["passed"] for r in results), "ratio_tol": ratio_tol,
            "labels": fam_with_indicator.labels, "sequences": results,
            "method": "finite-n surrogate", "n_schedule": seqs[0].n_schedule if seqs else []}


def default_t_star_sequences(K, eps, M, anchors, n_schedule=(100, 1000, 10000),
                             n_odd=5):
    """Admissible sequences with collapsing pairs at ``anchors``.

    Extra pairs needed to reach ``M - 1`` interior nodes are stacked on the
    anchors (multiplicity 4, 6, ...) or, without anchors, placed on an even
    spread. The single point is moved over up to ``n_odd`` positions that
    keep the limit set eps-separated.
    """
    anchors = sorted(float(a) for a in anchors)
    n_pairs = (M - 2) // 2
    if (M - 1) % 2 == 0 or n_pairs < 1:
        raise ValueError("admissible sequences need an even M >= 2")
    if not anchors:
        anchors = list(np.linspace(0, 1, min(K, n_pairs) + 2)[1:-1])
    mults = {a: 2 for a in anchors[:n_pairs]}
    extra = n_pairs - len(mults)
    keys = sorted(mults)
    for j in range(extra):
        mults[keys[j % len(keys)]] += 2
    lo = 1.0 / min(n_schedule) * max(mults.values())
    candidates = np.linspace(eps / 2, 1 - eps / 2, 8 * n_odd + 1)
    odd = [c for c in candidates
           if all(abs(c - a) >= max(eps, lo) for a in mults) and lo < c < 1 - lo]
    if len(odd) > n_odd:
        idx = np.linspace(0, len(odd) - 1, n_odd).round().astype(int)
        odd = [odd[i] for i in idx]
    seqs = []
    for c in odd:
        spec = [(a, k) for a, k in mults.items()] + [(float(c), 1)]
        try:
            seqs.append(generate_admissible(K, eps, M, spec, n_schedule))
        except ValueError:
            continue
    return seqs


# --- polynomial fits -------------------------------------------------------

class FittedPolynomial:
    """``q(t) = sum_m b_m phi_m(t)`` with its certification data."""

    def __init__(self, coefficients, family, certified_grid, cert_min, info=None):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.family = family
        self.certified_grid = np.asarray(certified_grid, dtype=float)
        self.cert_min = float(cert_min)
        self.info = dict(info or {})

    def __call__(self, t):
        return self.family.matrix(t) @ self.coefficients

    def scaled(self, c):
        info = dict(self.info, scale=self.info.get("scale", 1.0) * c)
        return FittedPolynomial(c * self.coefficients, self.family,
                                self.certified_grid, c * self.cert_min, info)

    def to_dict(self):
        return {"coefficients": self.coefficients.tolist(),
                "labels": self.family.labels,
                "certification": {k: v for k, v in self.info.items()
                                  if not isinstance(v, np.ndarray)}}


def _fd_row(fam, t, h=DERIV_STEP):
    return (fam.matrix([t + h]) - fam.matrix([t - h]))[0] / (2 * h)


def _equality_system(fam, nodes, values, deriv_nodes):
    rows = [fam.matrix([t])[0] for t in nodes]
    rhs = list(values)
    for t in deriv_nodes:
        rows.append(_fd_row(fam, t))
        rhs.append(0.0)
    if not rows:
        return np.zeros((0, len(fam))), np.zeros(0)
    return np.array(rows), np.array(rhs, dtype=float)


def _polish(b, E, f):
    """Smallest change to ``b`` that satisfies ``E b = f`` to machine precision."""
    if E.shape[0] == 0:
        return b
    for _ in range(2):
        r = E @ b - f
        b = b - np.linalg.lstsq(E, r, rcond=None)[0]
    return b


def _local_minima(v, count):
    """Indices of up to ``count`` most negative local minima of ``v``."""
    interior = np.r_[True, v[1:] <= v[:-1]] & np.r_[v[:-1] <= v[1:], True]
    idx = np.flatnonzero(interior)
    idx = idx[np.argsort(v[idx], kind="stable")]
    return idx[:count]


def _interior_flat(F, t, h=DERIV_STEP):
    if t - h < 0 or t + h > 1:
        return False
    f = F(np.array([t - h, t, t + h]))
    return bool(f[0] == f[1] == f[2])


def _solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub,
                  A_eq=A_eq if A_eq.shape[0] else None,
                  b_eq=b_eq if A_eq.shape[0] else None,
                  bounds=bounds, method="highs", options=LP_OPTIONS)
    return res


def fit_vanishing_polynomial(fam, nodes, grid_n=FIT_GRID, cert_n=None,
                             floor_radius=0.05, tol_cert=CERT_TOL,
                             positive_floor=1e-10, max_exchange=30):
    """Nonnegative polynomial vanishing exactly on ``nodes``.

    The LP maximizes a floor ``s`` with ``q(t) >= s * min(1, (dist(t, T') /
    floor_radius)^2)`` on the grid, subject to ``q <= 1``, ``q(t') = 0`` and a
    central-difference ``q'(t') = 0`` at interior nodes. The result is
    rescaled so that its maximum on the certification grid is 1.

    Raises
    ------
    FitError
        The LP is infeasible (the family cannot certify these nodes).
    CertificationError
        The fit is negative somewhere on the certification grid.
    """
    nodes = np.sort(np.asarray(nodes, dtype=float).reshape(-1))
    m = len(fam)
    if m < 2 * nodes.size + 1:
        raise ValueError("need a family of size >= 2 |T'| + 1")
    cert_n = 10 * grid_n if cert_n is None else cert_n
    grid = np.linspace(0.0, 1.0, grid_n)
    fine = np.linspace(0.0, 1.0, cert_n)
    Phi_fine = fam.matrix(fine)
    deriv = [t for t in nodes if DERIV_STEP <= t <= 1 - DERIV_STEP]
    E, f = _equality_system(fam, nodes, np.zeros(nodes.size), deriv)

    def weight(t):
        if nodes.size == 0:
            return np.ones_like(t)
        dist = np.abs(t[:, None] - nodes[None, :]).min(axis=1)
        return np.minimum(1.0, (dist / floor_radius) ** 2)

    pts = grid
    for rounds in range(max_exchange):
        Phi = fam.matrix(pts)
        w = weight(pts)
        A_ub = np.vstack([np.column_stack([-Phi, w]),
                          np.column_stack([Phi, np.zeros(pts.size)])])
        b_ub = np.concatenate([np.zeros(pts.size), np.ones(pts.size)])
        A_eq = np.column_stack([E, np.zeros(E.shape[0])])
        c = np.zeros(m + 1)
        c[-1] = -1.0
        res = _solve_lp(c, A_ub, b_ub, A_eq, f, [(None, None)] * m + [(0, None)])
        if res.status != 0:
            raise FitError(f"family cannot certify T'={nodes.tolist()} at this grid: "
                           f"{res.message}")
        b = _polish(res.x[:m], E, f)
        q = Phi_fine @ b
        top = q.max()
        if top <= 0:
            raise FitError("fitted polynomial is not positive anywhere")
        bad = _local_minima(q / top, 8)
        bad = bad[(q / top)[bad] < -tol_cert]
        if bad.size == 0:
            break
        pts = np.unique(np.concatenate([pts, fine[bad]]))
    b = b / top
    q = Phi_fine @ b
    cert_min = float(q.min())
    if cert_min < -tol_cert:
        i = int(np.argmin(q))
        raise CertificationError(f"q = {cert_min:.3e} < 0 at t = {fine[i]:.6f}",
                                 witness=float(fine[i]))
    zero_vals = fam.matrix(nodes) @ b if nodes.size else np.zeros(0)
    low = fine[q <= positive_floor]
    if nodes.size and low.size:
        eps0 = float(np.abs(low[:, None] - nodes[None, :]).min(axis=1).max())
    else:
        eps0 = 0.0 if nodes.size else (float("inf") if low.size else 0.0)
    info = {"kind": "vanishing", "nodes": nodes.tolist(), "grid_n": grid_n,
            "cert_n": cert_n, "exchange_rounds": rounds + 1,
            "floor": float(res.x[-1] / top),
            "max_zero_residual": float(np.abs(zero_vals).max()) if nodes.size else 0.0,
            "eps0": eps0, "positive_floor": positive_floor, "tol_cert": tol_cert}
    return FittedPolynomial(b, fam, fine, cert_min, info)


def _edge_points(F):
    nodes = getattr(F, "nodes", np.zeros(0))
    eps = getattr(F, "eps", None)
    if eps is None:
        return np.zeros(0)
    e = np.concatenate([nodes - eps, nodes + eps])
    return e[(e >= 0) & (e <= 1)]


def _upper_envelope(F, t, h=1e-12):
    return np.maximum(F(t), np.maximum(F(np.clip(t - h, 0, 1)), F(np.clip(t + h, 0, 1))))


def fit_majorant_polynomial(fam, F, equality_nodes, grid_n=FIT_GRID, cert_n=None,
                            tol_cert=CERT_TOL, max_exchange=30, margin=None):
    """Polynomial ``q >= F`` with ``q = F`` on ``equality_nodes``, smallest maximum.

    ``F`` is a piecewise constant indicator (see
    :func:`~superres.measure.indicator_vanishing` and
    :func:`~superres.measure.indicator_window`). The LP minimizes
    ``max_grid q``. Window edges are added to the grid with the upper
    envelope of ``F`` so that the constraint holds in the limit from the
    outside. Equality nodes where ``F`` is locally constant also get a
    central-difference ``q' = 0`` constraint, since ``q - F`` has an
    interior minimum there. Grid constraints away from the equality nodes
    carry a small ``margin`` (default ``tol_cert / 2``) that absorbs the LP
    feasibility tolerance.

    Raises
    ------
    FitError, CertificationError
    """
    margin = tol_cert / 2 if margin is None else margin
    nodes = np.sort(np.asarray(equality_nodes, dtype=float).reshape(-1))
    m = len(fam)
    cert_n = 10 * grid_n if cert_n is None else cert_n
    fine = np.linspace(0.0, 1.0, cert_n)
    Phi_fine = fam.matrix(fine)
    F_fine = F(fine)
    deriv = [t for t in nodes if _interior_flat(F, t)]
    E, f = _equality_system(fam, nodes, F(nodes) if nodes.size else [], deriv)
    pts = np.unique(np.concatenate([np.linspace(0.0, 1.0, grid_n), _edge_points(F)]))
    for rounds in range(max_exchange):
        Phi = fam.matrix(pts)
        env = _upper_envelope(F, pts)
        if nodes.size:
            far = np.abs(pts[:, None] - nodes[None, :]).min(axis=1) > 1e-3
        else:
            far = np.ones(pts.size, dtype=bool)
        env = env + np.where(far, margin, 0.0)
        A_ub = np.vstack([np.column_stack([-Phi, np.zeros(pts.size)]),
                          np.column_stack([Phi, -np.ones(pts.size)])])
        b_ub = np.concatenate([-env, np.zeros(pts.size)])
        A_eq = np.column_stack([E, np.zeros(E.shape[0])])
        c = np.zeros(m + 1)
        c[-1] = 1.0
        res = _solve_lp(c, A_ub, b_ub, A_eq, f, [(None, None)] * (m + 1))
        if res.status != 0:
            raise FitError(f"majorant LP failed for nodes {nodes.tolist()}: {res.message}")
        b = _polish(res.x[:m], E, f)
        slack = Phi_fine @ b - F_fine
        bad = _local_minima(slack, 8)
        bad = bad[slack[bad] < -tol_cert]
        if bad.size == 0:
            break
        pts = np.unique(np.concatenate([pts, fine[bad]]))
    slack = Phi_fine @ b - F_fine
    cert_min = float(slack.min())
    if cert_min < -tol_cert:
        i = int(np.argmin(slack))
        raise CertificationError(f"q - F = {cert_min:.3e} at t = {fine[i]:.6f}",
                                 witness=float(fine[i]))
    eq_res = (np.abs(fam.matrix(nodes) @ b - F(nodes)).max() if nodes.size else 0.0)
    info = {"kind": "majorant", "nodes": nodes.tolist(), "target": getattr(F, "label", "F"),
            "grid_n": grid_n, "cert_n": cert_n, "exchange_rounds": rounds + 1,
            "max_value": float((Phi_fine @ b).max()), "min_slack": cert_min,
            "max_equality_residual": float(eq_res), "tol_cert": tol_cert}
    return FittedPolynomial(b, fam, fine, cert_min, info)
