"""
Tensor-product point-spread functions and the forward imaging model.

An observation of a measure ``mu`` on the unit cube is the ``M x ... x M``
tensor

    y[m_1, ..., m_d] = sum_k a_k * prod_i psi_i(x^(i)_{m_i} - t_k^(i))

Everything here is separable: a point is mapped to the outer product of one
length-``M`` vector per axis and the full tensor is never built entry by
entry.
"""

import json

import mpmath
import numpy as np

from .measure import AtomicMeasure, GridMeasure


class GaussianKernel:
    """Unnormalized Gaussian ``exp(-xi**2 / (2 sigma**2))``."""

    kind = "gaussian"
    verified = True

    def __init__(self, sigma):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(-xi ** 2 / (2.0 * self.sigma ** 2))

    def mp(self, xi):
        return mpmath.exp(-mpmath.mpf(xi) ** 2 / (2 * mpmath.mpf(self.sigma) ** 2))

    def to_dict(self):
        return {"type": "gaussian", "sigma": self.sigma}


class TableKernel:
    """Tabulated kernel with linear interpolation (zero outside the table).

    Tabulated kernels carry ``verified = False`` until a T-system check has
    been run on their translates.
    """

    kind = "table"

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("table kernel needs matching 1-D xs, ys with >= 2 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("table xs must be strictly increasing")
        self.xs, self.ys = xs, ys
        self.verified = False

    def __call__(self, xi):
        return np.interp(np.asarray(xi, dtype=float), self.xs, self.ys,
                         left=0.0, right=0.0)

    def to_dict(self):
        return {"type": "table", "xs": self.xs.tolist(), "ys": self.ys.tolist()}


def kernel_from_dict(cfg):
    kind = cfg.get("type")
    if kind == "gaussian":
        return GaussianKernel(cfg["sigma"])
    if kind == "table":
        return TableKernel(cfg["xs"], cfg["ys"])
    raise ValueError(f"unknown kernel type {kind!r}")


def uniform_grid(M):
    """Interior sample points ``m / (M + 1)``, ``m = 1..M``."""
    return np.arange(1, M + 1) / (M + 1.0)


class ComponentPSF:
    """One axis of the PSF: a kernel sampled at ``M`` translates.

    ``translates(t)`` returns the ``(len(t), M)`` matrix with entries
    ``psi(x_m - t)``; this is the per-axis building block of every
    separable operation in the package.
    """

    def __init__(self, kernel, sample_points, axis=0):
        x = np.asarray(sample_points, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("need at least one sample point")
        if np.any(np.diff(x) <= 0):
            raise ValueError("sample points must be strictly increasing")
        if x[0] < 0 or x[-1] > 1:
            raise ValueError("sample points must lie in [0, 1]")
        self.kernel = kernel
        self.sample_points = x
        self.axis = axis

    @property
    def M(self):
        return self.sample_points.size

    def translates(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.kernel(self.sample_points[None, :] - t[:, None])

    def translates_mp(self, t):
        """High-precision translates (``None`` if the kernel has no mp form)."""
        mp_kernel = getattr(self.kernel, "mp", None)
        if mp_kernel is None:
            return None
        x = [mpmath.mpf(float(v)) for v in self.sample_points]
        return [[mp_kernel(xm - mpmath.mpf(float(ti))) for xm in x] for ti in t]

    def function(self, m):
        """The scalar translate ``t -> psi(x_m - t)`` (0-based ``m``)."""
        x_m = self.sample_points[m]
        kernel = self.kernel
        return lambda t: kernel(x_m - np.asarray(t, dtype=float))


class ObservationTensor:
    """Dense ``M^d`` measurement tensor with its noise level."""

    def __init__(self, data, noise_level=0.0):
        self.data = np.asarray(data, dtype=float)
        if noise_level < 0:
            raise ValueError("noise level must be nonnegative")
        self.noise_level = float(noise_level)

    @property
    def shape(self):
        return self.data.shape

    def to_dict(self):
        return {"shape": list(self.data.shape),
                "data": self.data.ravel(order="C").tolist(),
                "noise_level": self.noise_level}

    @classmethod
    def from_dict(cls, obj):
        data = np.asarray(obj["data"], dtype=float).reshape(obj["shape"])
        return cls(data, obj.get("noise_level", 0.0))


class TensorPSF:
    """Product PSF ``Psi(xi) = prod_i psi_i(xi_i)`` over ``d`` axes."""

    def __init__(self, components):
        components = list(components)
        if not components:
            raise ValueError("need at least one component")
        Ms = {c.M for c in components}
        if len(Ms) != 1:
            raise ValueError("all components must share the same M")
        for i, c in enumerate(components):
            c.axis = i
        self.components = components

    @classmethod
    def gaussian(cls, d, M, sigma, grid=None):
        x = uniform_grid(M) if grid is None else grid
        return cls([ComponentPSF(GaussianKernel(sigma), x, i) for i in range(d)])

    @property
    def dim(self):
        return len(self.components)

    @property
    def M(self):
        return self.components[0].M

    @property
    def shape(self):
        return (self.M,) * self.dim

    @property
    def verified(self):
        return all(getattr(c.kernel, "verified", False) for c in self.components)

    def axis_vectors(self, point):
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.size != self.dim:
            raise ValueError(f"expected a point in dimension {self.dim}")
        return [c.translates(point[i])[0] for i, c in enumerate(self.components)]

    def to_dict(self):
        c0 = self.components[0]
        return {"d": self.dim, "M": self.M, "kernel": c0.kernel.to_dict(),
                "grid": c0.sample_points.tolist()}

    @classmethod
    def from_dict(cls, cfg):
        d, M = int(cfg["d"]), int(cfg["M"])
        grid = cfg.get("grid", "uniform")
        x = uniform_grid(M) if grid == "uniform" else np.asarray(grid, dtype=float)
        if x.size != M:
            raise ValueError("explicit grid length must equal M")
        return cls([ComponentPSF(kernel_from_dict(cfg["kernel"]), x, i)
                    for i in range(d)])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def outer(vectors):
    """Outer product of a list of 1-D arrays."""
    out = np.asarray(vectors[0], dtype=float)
    for v in vectors[1:]:
        out = np.multiply.outer(out, np.asarray(v, dtype=float))
    return out


def eval_column(psf, t):
    """Rank-1 tensor ``psi^(1)_[M](t_1) x ... x psi^(d)_[M](t_d)``."""
    return outer(psf.axis_vectors(t))


def _atoms_of(psf, m):
    if m.dim != psf.dim:
        raise ValueError(f"measure dimension {m.dim} != PSF dimension {psf.dim}")
    if isinstance(m, GridMeasure):
        return m.locations(), m.amplitudes()
    return m.locations, m.amplitudes


def forward(psf, m):
    """Image of a measure: ``sum_k a_k * eval_column(theta_k)``."""
    locs, amps = _atoms_of(psf, m)
    if amps.size == 0:
        return ObservationTensor(np.zeros(psf.shape), 0.0)
    # one (K, M) factor per axis, contracted with the amplitudes in a fixed order
    factors = [c.translates(locs[:, i]) for i, c in enumerate(psf.components)]
    letters = "abcdefghijklmnopqrstuvwxyz"[:psf.dim]
    spec = "k," + ",".join("k" + ch for ch in letters) + "->" + letters
    y = np.einsum(spec, amps, *factors, optimize=False)
    return ObservationTensor(y, 0.0)


def add_noise(y, delta, seed):
    """Add a random perturbation of Frobenius norm exactly ``delta``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    data = np.array(y.data, dtype=float)
    if delta > 0:
        rng = np.random.default_rng(seed)
        e = rng.standard_normal(data.shape)
        e *= delta / np.linalg.norm(e)
        data = data + e
    return ObservationTensor(data, delta)


def misfit(psf, y, m):
    """Frobenius data discrepancy ``||y - forward(m)||_F``."""
    if y.shape != psf.shape:
        raise ValueError(f"observation shape {y.shape} != PSF shape {psf.shape}")
    return float(np.linalg.norm(y.data - forward(psf, m).data))


def lipschitz_estimate(psf, samples=1000, seed=0):
    """Empirical lower estimate of the Lipschitz constant of the forward map.

    Over random pairs of unit point masses (half of them close together)
    the ratio of image distance to generalized Wasserstein distance is
    maximized. For two atoms of equal
    mass ``a`` at l1-distance ``c`` that distance is ``a * min(2, c)``, so
    the mass cancels.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0.0
    for i in range(samples):
        p = rng.random(psf.dim)
        if i % 2:
            # nearby pairs probe the local slope, far pairs the global ratio
            q = np.clip(p + 1e-3 * rng.standard_normal(psf.dim), 0.0, 1.0)
        else:
            q = rng.random(psf.dim)
        c = float(np.abs(p - q).sum())
        if c == 0.0:
            continue
        num = np.linalg.norm(eval_column(psf, p) - eval_column(psf, q))
        best = max(best, num / min(2.0, c))
    return float(best)
