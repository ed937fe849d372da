"""
Feasibility solver over a gridded nonnegative measure.

The decision variable is a weight ``w >= 0`` on an ``N^d`` tensor grid. The
operator ``A`` maps ``w`` to ``sum_j w_j eval_column(node_j)``; with one
``(M, N)`` matrix ``Phi_i`` per axis it is the Kronecker product of the
``Phi_i`` and is only ever applied through per-axis contractions.

Feasibility ``||y - A w||_F <= delta'`` is reached by minimizing the misfit
over ``w >= 0`` and stopping as soon as the target is met.
"""

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .measure import AtomicMeasure, GridMeasure

FEASIBLE = "feasible"
INFEASIBLE = "infeasible-at-tolerance"

DEFAULT_GRID = {1: 64, 2: 64, 3: 24, 4: 12}


class Dictionary:
    """Separable dictionary of PSF translates on a tensor grid."""

    def __init__(self, psf, grid_res=None, grid=None):
        d = psf.dim
        if grid is None:
            N = DEFAULT_GRID.get(d, 12) if grid_res is None else int(grid_res)
            if N < 2:
                raise ValueError("grid resolution must be >= 2")
            grid = [np.linspace(0.0, 1.0, N) for _ in range(d)]
        if len(grid) != d:
            raise ValueError("need one node list per axis")
        self.psf = psf
        self.grid = [np.asarray(g, dtype=float) for g in grid]
        # Phi_i[m, j] = psi_i(x_m - g_j)
        self.mats = [c.translates(g).T for c, g in zip(psf.components, self.grid)]

    @property
    def dim(self):
        return len(self.grid)

    @property
    def shape(self):
        return tuple(g.size for g in self.grid)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @staticmethod
    def _apply(x, mats):
        # contract the leading axis each time; the new axes accumulate at the end
        for P in mats:
            x = np.tensordot(x, P, axes=([0], [1]))
        return x

    def forward(self, w):
        """``A w`` for a weight tensor of shape ``(N,) * d``."""
        return self._apply(np.asarray(w, dtype=float).reshape(self.shape), self.mats)

    def adjoint(self, r):
        """``A^T r`` for a residual tensor of shape ``(M,) * d``."""
        return self._apply(np.asarray(r, dtype=float), [P.T for P in self.mats])

    def columns(self, flat_idx):
        """Dense ``(M^d, len(flat_idx))`` block of selected columns."""
        multi = np.unravel_index(np.asarray(flat_idx, dtype=int), self.shape)
        cols = self.mats[0][:, multi[0]]
        for i in range(1, self.dim):
            # row-major: earlier axes vary slowest
            cols = (cols[:, None, :] * self.mats[i][:, multi[i]][None, :, :]).reshape(
                -1, cols.shape[1])
        return cols

    def dense(self):
        """Full matrix; only for small test instances."""
        return self.columns(np.arange(self.size))

    def operator_norm(self):
        return float(np.prod([np.linalg.norm(P, 2) for P in self.mats]))


class SolveResult:
    def __init__(self, estimate, achieved_misfit, iterations, status, history, method):
        self.estimate = estimate
        self.achieved_misfit = float(achieved_misfit)
        self.iterations = int(iterations)
        self.status = status
        self.history = list(history)
        self.method = method

    @property
    def feasible(self):
        return self.status == FEASIBLE

    def to_dict(self):
        return {"status": self.status, "achieved_misfit": self.achieved_misfit,
                "iterations": self.iterations, "method": self.method,
                "estimate": self.estimate.to_dict()}


def _active_set(D, y, target, grad_tol, max_iter):
    """Lawson-Hanson NNLS with an early exit at ``misfit <= target``."""
    n = D.size
    yv = y.ravel()
    w = np.zeros(n)
    passive = []
    r = yv.copy()
    history = [float(np.linalg.norm(r))]
    it = 0
    while history[-1] > target and it < max_iter:
        g = D.adjoint(r.reshape(y.shape)).ravel()
        g[passive] = -np.inf
        j = int(np.argmax(g))
        if g[j] <= grad_tol:
            break
        passive.append(j)
        while True:
            it += 1
            cols = D.columns(passive)
            z = np.linalg.lstsq(cols, yv, rcond=None)[0]
            if np.all(z > 0):
                w[passive] = z
                break
            wp = w[passive]
            neg = z <= 0
            step = np.min(wp[neg] / (wp[neg] - z[neg]))
            wp = wp + step * (z - wp)
            wp[np.abs(wp) <= 1e-15] = 0.0
            w[passive] = wp
            passive = [p for p, v in zip(passive, wp) if v > 0]
            if not passive:
                break
        r = yv - D.columns(passive) @ w[passive] if passive else yv.copy()
        history.append(float(np.linalg.norm(r)))
    return w, history, it


def _projected_gradient(D, y, target, max_iter, stall):
    """Projected gradient with step ``1 / ||A||^2`` (monotone misfit)."""
    step = 1.0 / D.operator_norm() ** 2
    w = np.zeros(D.shape)
    r = y.copy()
    history = [float(np.linalg.norm(r))]
    it = 0
    while history[-1] > target and it < max_iter:
        it += 1
        w = np.maximum(w + step * D.adjoint(r), 0.0)
        r = y - D.forward(w)
        history.append(float(np.linalg.norm(r)))
        if history[-2] - history[-1] <= stall * history[-2]:
            break
    return w.ravel(), history, it


def solve_feasibility(psf, y, delta_prime, grid_res=None, opts=None):
    """Find ``w >= 0`` on the grid with ``||y - A w||_F <= delta_prime``.

    Parameters
    ----------
    psf : TensorPSF
    y : ObservationTensor
    delta_prime : float
        Feasibility radius. With 0 the solver runs to its stall floor.
    grid_res : int, optional
        Nodes per axis; defaults by dimension (64, 64, 24, 12).
    opts : dict, optional
        ``method`` (``"active-set"`` default or ``"projected-gradient"``),
        ``max_iter``, ``grad_tol`` (active set), ``stall`` (relative misfit
        decrease below which projected gradient stops), ``grid`` (explicit
        per-axis node lists).

    Returns
    -------
    SolveResult
        ``status`` is feasible iff the recomputed misfit is within
        ``delta_prime + 1e-9``.
    """
    if delta_prime < 0:
        raise ValueError("delta_prime must be nonnegative")
    opts = dict(opts or {})
    if y.shape != psf.shape:
        raise ValueError(f"observation shape {y.shape} != PSF shape {psf.shape}")
    D = Dictionary(psf, grid_res, opts.get("grid"))
    data = np.asarray(y.data, dtype=float)
    method = opts.get("method", "active-set")
    if method == "active-set":
        scale = D.operator_norm() * max(np.linalg.norm(data), 1e-300)
        w, history, it = _active_set(D, data, delta_prime,
                                     opts.get("grad_tol", 1e-14 * scale),
                                     opts.get("max_iter", 20 * np.prod(psf.shape) + 100))
    elif method == "projected-gradient":
        w, history, it = _projected_gradient(D, data, delta_prime,
                                             opts.get("max_iter", 100000),
                                             opts.get("stall", 1e-12))
    else:
        raise ValueError(f"unknown method {method!r}")
    est = GridMeasure.from_dense(D.grid, np.maximum(w, 0.0).reshape(D.shape))
    achieved = float(np.linalg.norm(data - D.forward(est.dense())))
    status = FEASIBLE if achieved <= delta_prime + 1e-9 else INFEASIBLE
    return SolveResult(est, achieved, it, status, history, method)


def extract_support(r, cluster_radius=None, max_atoms=None, mass_floor=None):
    """Turn grid weights into an atomic estimate.

    Nodes are grouped by single linkage in the sup norm at distance
    ``cluster_radius`` (default two grid spacings); each group becomes one
    atom at its weighted centroid carrying the summed weight. Groups lighter
    than ``mass_floor`` (default ``1e-6`` of the total mass) are dropped.
    With ``max_atoms`` only the heaviest groups are kept. Atoms come out in
    lexicographic order of their first node.
    """
    est = r.estimate if isinstance(r, SolveResult) else r
    locs, w = est.locations(), est.amplitudes()
    if w.size == 0:
        return AtomicMeasure.empty(est.dim)
    if cluster_radius is None:
        spacing = max(float(np.max(np.diff(g))) for g in est.grid)
        cluster_radius = 2.0 * spacing
    if mass_floor is None:
        mass_floor = 1e-6 * float(w.sum())
    if w.size == 1:
        labels = np.array([1])
    else:
        Z = linkage(locs, method="single", metric="chebyshev")
        labels = fcluster(Z, t=cluster_radius, criterion="distance")
    # number clusters by their first (lexicographically smallest) node
    first = {}
    for pos, lab in enumerate(labels):
        first.setdefault(lab, pos)
    groups = sorted(first, key=first.get)
    atoms, amps = [], []
    for lab in groups:
        sel = labels == lab
        mass = float(w[sel].sum())
        if mass < mass_floor:
            continue
        atoms.append((w[sel, None] * locs[sel]).sum(axis=0) / mass)
        amps.append(mass)
    if max_atoms is not None and len(amps) > max_atoms:
        keep = sorted(np.argsort(-np.asarray(amps), kind="stable")[:max_atoms])
        atoms = [atoms[i] for i in keep]
        amps = [amps[i] for i in keep]
    if not amps:
        return AtomicMeasure.empty(est.dim)
    return AtomicMeasure(np.clip(np.array(atoms), 0.0, 1.0), np.array(amps), dim=est.dim)
