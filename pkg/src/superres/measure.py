"""
Nonnegative measures on the unit cube and their geometric functionals.

Two concrete representations are used throughout:

* :class:`AtomicMeasure`: finitely many point masses with positive
  amplitudes (the true scene and every extracted estimate);
* :class:`GridMeasure`: sparse nonnegative weights on a tensor grid (the
  solver's discretized estimate).

Neighborhoods are closed sup-norm balls: a point at distance exactly ``eps``
from a center counts as inside.
"""

import itertools
import json

import numpy as np

PRUNE_THRESHOLD = 1e-12


class SeparationError(ValueError):
    """Raised when K atoms cannot be eps-separated inside the cube."""


class AtomicMeasure:
    """``mu = sum_k a_k delta_{theta_k}`` on ``[0, 1]^d``.

    Parameters
    ----------
    locations : array_like, shape (K, d)
        Atom positions; every coordinate in ``[0, 1]``, pairwise distinct.
    amplitudes : array_like, shape (K,)
        Strictly positive masses.
    dim : int, optional
        Needed only for the empty measure.
    """

    def __init__(self, locations, amplitudes, dim=None):
        amps = np.asarray(amplitudes, dtype=float).reshape(-1)
        locs = np.asarray(locations, dtype=float)
        if locs.size == 0:
            if dim is None:
                raise ValueError("dim is required for an empty measure")
            locs = np.zeros((0, int(dim)))
        elif locs.ndim == 1:
            locs = locs.reshape(-1, 1) if dim in (None, 1) else locs.reshape(1, -1)
        if dim is not None and locs.shape[1] != dim:
            raise ValueError(f"locations have dimension {locs.shape[1]}, expected {dim}")
        if locs.shape[0] != amps.size:
            raise ValueError("one amplitude per atom is required")
        if np.any(amps <= 0) or not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite and > 0")
        if np.any(locs < 0) or np.any(locs > 1):
            raise ValueError("atom coordinates must lie in [0, 1]")
        if len({tuple(row) for row in locs.tolist()}) != locs.shape[0]:
            raise ValueError("atom locations must be pairwise distinct")
        locs.setflags(write=False)
        amps.setflags(write=False)
        self.locations = locs
        self.amplitudes = amps

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @property
    def dim(self):
        return self.locations.shape[1]

    @property
    def K(self):
        return self.locations.shape[0]

    def __len__(self):
        return self.K

    def __repr__(self):
        return f"AtomicMeasure(dim={self.dim}, K={self.K})"

    def to_dict(self):
        return {"dim": self.dim,
                "atoms": [{"loc": loc.tolist(), "amp": float(a)}
                          for loc, a in zip(self.locations, self.amplitudes)]}

    @classmethod
    def from_dict(cls, obj):
        atoms = obj.get("atoms", [])
        d = int(obj["dim"])
        if not atoms:
            return cls.empty(d)
        return cls([a["loc"] for a in atoms], [a["amp"] for a in atoms], dim=d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class GridMeasure:
    """Sparse nonnegative weights on a tensor-product grid.

    ``grid`` is a list of ``d`` sorted node arrays; ``index`` holds the
    multi-indices of the stored nodes, ``weights`` their masses.
    """

    def __init__(self, grid, index, weights, prune=PRUNE_THRESHOLD):
        self.grid = [np.asarray(g, dtype=float) for g in grid]
        for g in self.grid:
            if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] > 1:
                raise ValueError("grid nodes must be sorted, distinct, in [0, 1]")
        index = np.asarray(index, dtype=int).reshape(-1, len(self.grid))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if index.shape[0] != weights.size:
            raise ValueError("one weight per index is required")
        if np.any(weights < 0):
            raise ValueError("grid weights must be nonnegative")
        shape = np.array([g.size for g in self.grid])
        if index.size and (np.any(index < 0) or np.any(index >= shape)):
            raise ValueError("weight index outside the grid")
        keep = weights > prune
        index, weights = index[keep], weights[keep]
        order = np.lexsort(index.T[::-1]) if index.size else np.zeros(0, dtype=int)
        self.index = index[order]
        self.weights = weights[order]

    @classmethod
    def from_dense(cls, grid, w, prune=PRUNE_THRESHOLD):
        w = np.asarray(w, dtype=float)
        idx = np.argwhere(w > prune)
        return cls(grid, idx, w[tuple(idx.T)], prune=prune)

    @property
    def dim(self):
        return len(self.grid)

    @property
    def shape(self):
        return tuple(g.size for g in self.grid)

    def locations(self):
        if self.index.size == 0:
            return np.zeros((0, self.dim))
        return np.stack([g[self.index[:, i]] for i, g in enumerate(self.grid)], axis=1)

    def amplitudes(self):
        return self.weights

    def dense(self):
        w = np.zeros(self.shape)
        if self.index.size:
            w[tuple(self.index.T)] = self.weights
        return w

    def to_atomic(self):
        if self.weights.size == 0:
            return AtomicMeasure.empty(self.dim)
        return AtomicMeasure(self.locations(), self.weights, dim=self.dim)

    def __repr__(self):
        return f"GridMeasure(dim={self.dim}, shape={self.shape}, nnz={self.weights.size})"

    def to_dict(self):
        return {"dim": self.dim, "grid": [g.tolist() for g in self.grid],
                "weights": [[idx.tolist(), float(w)]
                            for idx, w in zip(self.index, self.weights)]}

    @classmethod
    def from_dict(cls, obj):
        pairs = obj.get("weights", [])
        d = int(obj["dim"])
        idx = np.array([p[0] for p in pairs], dtype=int).reshape(-1, d)
        return cls(obj["grid"], idx, [p[1] for p in pairs])


class SignedMeasure:
    """Difference ``positive - negative`` of two nonnegative measures."""

    def __init__(self, positive, negative):
        if positive.dim != negative.dim:
            raise ValueError("both parts must live on the same cube")
        self.positive = positive
        self.negative = negative

    @property
    def dim(self):
        return self.positive.dim


def support(m):
    """``(locations, amplitudes)`` of an atomic or grid measure."""
    if isinstance(m, GridMeasure):
        return m.locations(), m.amplitudes()
    return m.locations, m.amplitudes


def tv_norm(m):
    """Total variation of a nonnegative measure (its total mass)."""
    return float(np.sum(support(m)[1]))


def separation(m):
    """Minimum per-coordinate gap between atoms and to the cube boundary.

    Every pair of atoms must differ on *every* axis by at least the returned
    value, so two atoms sharing one coordinate have separation 0.
    """
    locs = m.locations
    if locs.shape[0] == 0:
        raise ValueError("no atoms")
    v = min(float(locs.min()), float((1.0 - locs).min()))
    if locs.shape[0] > 1:
        gaps = np.abs(locs[:, None, :] - locs[None, :, :])
        iu = np.triu_indices(locs.shape[0], 1)
        v = min(v, float(gaps[iu].min()))
    return v


class NeighborhoodSpec:
    """Closed sup-norm balls of radius ``eps`` around the centers ``Theta``."""

    def __init__(self, centers, eps):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if not 0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        self.eps = float(eps)

    @property
    def K(self):
        return self.centers.shape[0]

    def sup_distance(self, points):
        """``(P, K)`` matrix of sup-norm distances to each center."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.abs(points[:, None, :] - self.centers[None, :, :]).max(axis=2)

    def ball_mask(self, points, k):
        return self.sup_distance(points)[:, k] <= self.eps

    def in_union(self, points):
        if self.K == 0:
            return np.zeros(np.atleast_2d(points).shape[0], dtype=bool)
        return (self.sup_distance(points) <= self.eps).any(axis=1)

    def complement_mask(self, points):
        return ~self.in_union(points)


def indicator_vanishing(nodes, eps):
    """``F_{T'}``: 0 within ``eps`` of some node, 1 elsewhere on ``[0, 1]``."""
    nodes = np.asarray(nodes, dtype=float).reshape(-1)

    def F(t):
        t = np.asarray(t, dtype=float)
        if nodes.size == 0:
            return np.ones_like(t)
        near = (np.abs(t[..., None] - nodes) <= eps).any(axis=-1)
        return np.where(near, 0.0, 1.0)

    F.nodes, F.eps, F.label = nodes, eps, "F_T"
    return F


def indicator_window(node, eps, sign=1.0):
    """``F^{+}`` (``sign=1``) or ``F^{-}`` (``sign=-1``): ``sign`` on the window."""
    node = float(node)

    def F(t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t - node) <= eps, float(sign), 0.0)

    F.nodes, F.eps = np.array([node]), eps
    F.label = "F+" if sign > 0 else "F-"
    return F


def _region_mask(points, region):
    spec, which = region
    if which == "complement":
        return spec.complement_mask(points)
    return spec.ball_mask(points, int(which))


def region_mass(m, region):
    """Mass of ``m`` on a closed ball ``theta_{k,eps}`` or on the complement.

    ``region`` is ``(NeighborhoodSpec, k)`` for the ``k``-th ball or
    ``(NeighborhoodSpec, "complement")``. For a :class:`SignedMeasure` the
    negative part is subtracted.
    """
    if isinstance(m, SignedMeasure):
        return region_mass(m.positive, region) - region_mass(m.negative, region)
    locs, amps = support(m)
    if amps.size == 0:
        return 0.0
    return float(amps[_region_mask(locs, region)].sum())


# --- sparse, separated approximation -------------------------------------

def _isotonic(y):
    """Least-squares nondecreasing fit (pool adjacent violators)."""
    blocks = []
    for v in y:
        blocks.append([float(v), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v2, n2 = blocks.pop()
            v1, n1 = blocks.pop()
            blocks.append([(v1 * n1 + v2 * n2) / (n1 + n2), n1 + n2])
    return np.concatenate([np.full(n, v) for v, n in blocks])


def _project_axis(coords, eps):
    """Nearest coordinates with pairwise gaps and boundary gaps >= eps."""
    K = coords.size
    order = np.argsort(coords, kind="stable")
    ranks = np.arange(1, K + 1)
    u = _isotonic(coords[order] - ranks * eps)
    u = np.clip(u, 0.0, 1.0 - (K + 1) * eps)
    out = np.empty(K)
    out[order] = u + ranks * eps
    return out


def project_separated(locations, eps):
    """Move atoms axis by axis so the result is ``eps``-separated."""
    locs = np.array(locations, dtype=float)
    for i in range(locs.shape[1]):
        locs[:, i] = _project_axis(locs[:, i], eps)
    return locs


def is_separated(m, eps, tol=0.0):
    return m.K > 0 and separation(m) >= eps - tol


def _merge_closest(locs, amps, K):
    locs, amps = [np.array(p) for p in locs], list(amps)
    while len(amps) > K:
        P = np.array(locs)
        D = np.abs(P[:, None, :] - P[None, :, :]).max(axis=2)
        np.fill_diagonal(D, np.inf)
        i, j = np.unravel_index(int(np.argmin(D)), D.shape)
        i, j = min(i, j), max(i, j)
        w = amps[i] + amps[j]
        locs[i] = (amps[i] * locs[i] + amps[j] * locs[j]) / w
        amps[i] = w
        del locs[j], amps[j]
    return np.array(locs), np.array(amps)


def approximate_residual(mu, K, eps, d_gw, max_rounds=60, step=None):
    """Upper bound on the distance from ``mu`` to K-sparse eps-separated measures.

    Mass is merged greedily (closest sup-norm pair first) into at most ``K``
    clusters, the cluster centers are projected onto the separation
    constraints, and a coordinate search with shrinking steps then lowers
    ``d_gw(mu, nu)``. The returned value is an upper bound, not the minimum.

    Returns
    -------
    nu : AtomicMeasure
    value : float
        ``d_gw(mu, nu)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    if (K + 1) * eps > 1.0 + 1e-12:
        raise SeparationError("separation infeasible")
    locs, amps = support(mu)
    if amps.size == 0:
        raise ValueError("cannot approximate the zero measure by a K-sparse measure")
    atomic = mu if isinstance(mu, AtomicMeasure) else mu.to_atomic()
    if atomic.K <= K and separation(atomic) >= eps:
        return atomic, 0.0

    c_locs, c_amps = _merge_closest(locs, amps, K)
    c_locs = project_separated(c_locs, eps)

    def build(P):
        return AtomicMeasure(P, c_amps, dim=mu.dim)

    def feasible(P):
        for i in range(P.shape[1]):
            col = np.sort(P[:, i])
            if col[0] < eps - 1e-12 or col[-1] > 1 - eps + 1e-12:
                return False
            if col.size > 1 and np.diff(col).min() < eps - 1e-12:
                return False
        return True

    best = float(d_gw(mu, build(c_locs)))
    h = eps / 2 if step is None else step
    for _ in range(max_rounds):
        improved = False
        for k in range(c_locs.shape[0]):
            for i in range(c_locs.shape[1]):
                for s in (-h, h):
                    P = c_locs.copy()
                    P[k, i] += s
                    if not feasible(P):
                        continue
                    val = float(d_gw(mu, build(P)))
                    if val < best - 1e-15:
                        best, c_locs, improved = val, P, True
        if not improved:
            h /= 2
            if h < 1e-6:
                break
    return build(c_locs), best


def lattice(axis_nodes):
    """All points of a tensor grid as an ``(N, d)`` array (C order)."""
    return np.array(list(itertools.product(*axis_nodes)), dtype=float)
