"""
Seeded experiment pipelines: simulate, recover, certify, bound, report.

A scenario is a plain JSON-compatible dictionary::

    {
      "name": "demo",
      "seed": 0,
      "psf": {"d": 2, "M": 6, "kernel": {"type": "gaussian", "sigma": 0.1}},
      "measure": {"dim": 2, "atoms": [{"loc": [0.3, 0.7], "amp": 1.0}, ...]}
                 | {"random": {"K": 2, "eps": 0.1, "on_grid": true,
                               "amp_range": [0.5, 2.0]}},
      "K": 2,                        # optional, defaults to the atom count
      "eps": 0.1,
      "deltas": [0.0, 0.01],         # noisy runs
      "eps_sweep": [0.05, 0.1],      # noisy runs, optional
      "delta_prime_policy": "inflated" | "exact",
      "lipschitz": null | number,    # null: seeded empirical estimate
      "grid_res": 64,
      "certificate": {"grid_n": 512, "verify_n": 1024,
                      "waive_t_star": true, "t_star_report": true}
    }

Reports contain no timings or paths, so equal scenarios give equal bytes.
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

from . import certificates as cert_mod
from .measure import AtomicMeasure, approximate_residual, is_separated
from .metrics import d_gw, evaluate_bound
from .psf import TensorPSF, add_noise, forward, lipschitz_estimate
from .solver import DEFAULT_GRID, extract_support, solve_feasibility

MAX_REJECTIONS = 100000


class ExperimentAbort(RuntimeError):
    """A pipeline stage failed; ``report`` carries the diagnostics so far."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class Scenario:
    def __init__(self, cfg):
        self.cfg = json.loads(json.dumps(cfg))
        self.seed = int(cfg.get("seed", 0))
        self.name = cfg.get("name", "scenario")
        self.psf = TensorPSF.from_dict(cfg["psf"])
        self.grid_res = int(cfg.get("grid_res") or DEFAULT_GRID.get(self.psf.dim, 12))
        self.eps = float(cfg.get("eps", 0.1))
        self.deltas = [float(v) for v in cfg.get("deltas", [])]
        self.eps_sweep = [float(v) for v in cfg.get("eps_sweep", [])]
        self.policy = cfg.get("delta_prime_policy", "inflated")
        if self.policy not in ("inflated", "exact"):
            raise ValueError(f"unknown delta' policy {self.policy!r}")
        self.cert_opts = dict(cfg.get("certificate", {}))
        self.measure = self._measure(cfg["measure"])
        self.K = int(cfg.get("K", self.measure.K))

    @classmethod
    def load(cls, path, seed=None):
        with open(path) as fh:
            cfg = json.load(fh)
        if seed is not None:
            cfg["seed"] = int(seed)
        return cls(cfg)

    def solver_grid(self):
        return np.linspace(0.0, 1.0, self.grid_res)

    def _measure(self, spec):
        if "random" not in spec:
            return AtomicMeasure.from_dict(spec)
        return random_separated_measure(self.psf.dim, seed=self.seed,
                                        grid=self.solver_grid(), **spec["random"])


def random_separated_measure(d, K, eps, seed=0, on_grid=True, amp_range=(0.5, 2.0),
                             grid=None):
    """K atoms with pairwise and boundary per-axis gaps ``>= eps``, by rejection."""
    rng = np.random.default_rng(seed)
    lo, hi = amp_range
    for _ in range(MAX_REJECTIONS):
        locs = rng.random((K, d))
        if on_grid:
            if grid is None:
                raise ValueError("on-grid sampling needs the solver grid")
            locs = grid[np.abs(locs[..., None] - grid).argmin(axis=-1)]
        if np.unique(locs, axis=0).shape[0] < K:
            continue
        m = AtomicMeasure(locs, rng.uniform(lo, hi, K), dim=d)
        if is_separated(m, eps):
            return m
    raise RuntimeError(f"no {eps}-separated {K}-atom measure after {MAX_REJECTIONS} draws")


def _match(truth, est):
    """Sup-norm Hausdorff distance and per-true-atom amplitude errors."""
    T, E = truth.locations, est.locations
    if E.shape[0] == 0:
        return float("inf"), [float(a) for a in truth.amplitudes], []
    D = np.abs(T[:, None, :] - E[None, :, :]).max(axis=2)
    haus = float(max(D.min(axis=1).max(), D.min(axis=0).max()))
    nearest = D.argmin(axis=1)
    amp_err = [float(abs(est.amplitudes[j] - a) / a) for j, a in zip(nearest, truth.amplitudes)]
    return haus, amp_err, nearest.tolist()


def _lipschitz(s):
    L = s.cfg.get("lipschitz")
    if L is not None:
        return float(L), "configured"
    return lipschitz_estimate(s.psf, samples=int(s.cfg.get("lipschitz_samples", 1000)),
                              seed=s.seed), "estimated"


def run_noiseless_experiment(s):
    """Exact-data recovery plus the noiseless certificate."""
    if s.cfg.get("delta", 0.0) != 0.0:
        raise ValueError("noiseless experiment needs delta = 0")
    mu = s.measure
    report = {"kind": "noiseless", "K": s.K, "d": s.psf.dim, "M": s.psf.M,
              "grid_res": s.grid_res, "hypothesis_violations": []}
    if s.psf.M < 2 * s.K + 1:
        report["hypothesis_violations"].append(
            f"M = {s.psf.M} < 2K + 1 = {2 * s.K + 1}: uniqueness is not guaranteed")
    y = forward(s.psf, mu)
    res = solve_feasibility(s.psf, y, 0.0, s.grid_res)
    est = extract_support(res)
    haus, amp_err, _ = _match(mu, est)
    truth_nodes = {tuple(p) for p in np.round(mu.locations, 12)}
    est_nodes = {tuple(p) for p in np.round(res.estimate.locations(), 12)}
    report.update(
        status=res.status, misfit=res.achieved_misfit, iterations=res.iterations,
        support_hausdorff=haus, amplitude_rel_errors=amp_err,
        max_amplitude_rel_error=max(amp_err) if amp_err else 0.0,
        exact_support=bool(truth_nodes == est_nodes),
        estimate=est.to_dict(), truth=mu.to_dict())
    if not report["hypothesis_violations"]:
        o = s.cert_opts
        try:
            Q = cert_mod.build_noiseless_Q(
                s.psf, mu.locations, grid_n=o.get("grid_n", 512),
                verify_n=o.get("verify_n"), eps0=2.0 / s.grid_res, strict=False)
            report["certificate"] = {"b_norm": Q.b_norm, "verification": Q.report}
        except (cert_mod.HypothesisError, cert_mod.CertificateError) as exc:
            report["certificate"] = {"error": str(exc)}
    return report


def _certificates(s, Theta, eps):
    o = s.cert_opts
    kw = dict(grid_n=o.get("grid_n", 512), verify_n=o.get("verify_n"),
              waive_t_star=o.get("waive_t_star", True))
    away = cert_mod.build_away_Q(s.psf, Theta, eps, **kw)
    near = cert_mod.build_near_family(s.psf, Theta, eps, **kw)
    return away, near


def _bound_row(s, mu, away, near, L, resid, delta, index):
    y = forward(s.psf, mu)
    y_noisy = add_noise(y, delta, s.seed + 1000 + index)
    R_hat = resid[1]
    dp = (1.0 + L * R_hat) * delta if s.policy == "inflated" else delta
    res = solve_feasibility(s.psf, y_noisy, dp, s.grid_res)
    rep = evaluate_bound(mu, s.psf, away, near, res, delta, s.eps, s.K, L,
                         delta_prime=dp, residual=resid)
    row = {k: rep[k] for k in (
        "delta", "delta_prime", "realized_dgw", "bound_value", "c1", "c2_eps", "c3",
        "alpha", "q_max", "b_norm", "b0_norm", "g_bar", "residual_upper", "satisfied",
        "away_mass_lhs", "away_mass_rhs", "away_mass_ok", "near_mass_lhs", "near_mass_rhs", "near_mass_ok",
        "approx_error_lhs", "approx_error_rhs", "approx_error_ok", "misfit")}
    row["sign_pattern"] = "".join("+" if v > 0 else "-" for v in rep["sign_pattern"])
    row["status"] = res.status
    return row


def run_noisy_experiment(s, deltas=None):
    """Delta sweep against the noisy error bound, then an eps sweep of the constants."""
    deltas = s.deltas if deltas is None else list(deltas)
    mu = s.measure
    report = {"kind": "noisy", "K": s.K, "d": s.psf.dim, "M": s.psf.M, "eps": s.eps,
              "grid_res": s.grid_res, "delta_prime_policy": s.policy,
              "hypothesis_violations": [], "delta_sweep": [], "eps_sweep": []}
    if s.psf.M < 2 * s.K + 2:
        report["hypothesis_violations"].append(
            f"M = {s.psf.M} < 2K + 2 = {2 * s.K + 2}: the noisy bound does not apply")
        return report
    L, L_src = _lipschitz(s)
    report.update(lipschitz=L, lipschitz_source=L_src)
    resid = approximate_residual(mu, s.K, s.eps, d_gw)
    Theta = resid[0].locations
    report["approximation"] = {"measure": resid[0].to_dict(), "residual_upper": resid[1]}
    if s.cert_opts.get("t_star_report", False):
        report["t_star"] = cert_mod.t_star_conditions(s.psf, Theta, s.eps, s.K)["summary"]
    try:
        away, near = _certificates(s, Theta, s.eps)
    except (cert_mod.HypothesisError, cert_mod.CertificateError) as exc:
        report["certificate_error"] = {"message": str(exc),
                                       "report": getattr(exc, "report", None)}
        raise ExperimentAbort(str(exc), report) from exc
    report["certificates"] = {
        "away": {"b_norm": away.b_norm, "constants": away.constants,
                 "verification": away.report},
        "near": {"".join("+" if v > 0 else "-" for v in p):
                 {"b_norm": c.b_norm, "constants": c.constants, "verification": c.report}
                 for p, c in sorted(near.items(), reverse=True)}}
    for i, delta in enumerate(deltas):
        report["delta_sweep"].append(_bound_row(s, mu, away, near, L, resid, delta, i))
    for eps in s.eps_sweep:
        row = {"eps": eps}
        try:
            nu, R_hat = approximate_residual(mu, s.K, eps, d_gw)
            a, n = _certificates(s, nu.locations, eps)
            alphas = [c.constants["alpha"] for c in n.values()]
            q_maxes = [c.constants["q_max"] for c in n.values()]
            mu_tv = float(mu.amplitudes.sum())
            row.update(status="ok", residual_upper=R_hat, g_bar=a.constants["g_bar"],
                       b_norm=a.b_norm, alpha_worst=max(alphas), q_max_worst=max(q_maxes),
                       b0_norm_worst=max(c.b_norm for c in n.values()),
                       c2_eps_worst=(2.0 * eps + 6.0 * max(alphas)) * mu_tv)
        except Exception as exc:  # recorded per row; the sweep continues
            row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        report["eps_sweep"].append(row)
    return report


# --- report emission -------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows, columns=None):
    """CSV text with a fixed column order (header only for no rows)."""
    rows = [_plain(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r.get(c), float) else r.get(c, "")
                    for c in columns])
    return buf.getvalue()


DELTA_COLUMNS = ["delta", "delta_prime", "realized_dgw", "bound_value", "c1", "c2_eps",
                 "c3", "alpha", "q_max", "b_norm", "b0_norm", "g_bar", "residual_upper",
                 "satisfied", "away_mass_lhs", "away_mass_rhs", "away_mass_ok", "near_mass_lhs",
                 "near_mass_rhs", "near_mass_ok", "approx_error_lhs", "approx_error_rhs", "approx_error_ok",
                 "misfit", "sign_pattern", "status"]
EPS_COLUMNS = ["eps", "status", "residual_upper", "g_bar", "b_norm", "alpha_worst",
               "q_max_worst", "b0_norm_worst", "c2_eps_worst", "error"]
NOISELESS_COLUMNS = ["status", "misfit", "exact_support", "support_hausdorff",
                     "max_amplitude_rel_error", "iterations"]


def emit_report(results, out_dir, fmt="json", provenance=None):
    """Write ``report.json`` or one CSV per section into ``out_dir``.

    ``results`` maps section names (``"noiseless"``, ``"noisy"``) to the
    reports above. Returns the written paths.
    """
    if fmt not in ("json", "csv"):
        raise ValueError("format must be csv or json")
    paths = []
    if fmt == "json":
        doc = {"provenance": provenance or {}, "sections": results}
        p = os.path.join(out_dir, "report.json")
        _atomic_write(p, dumps(doc))
        return [p]
    noisy = results.get("noisy")
    noiseless = results.get("noiseless")
    files = {}
    if noiseless is not None or not results:
        files["noiseless.csv"] = rows_to_csv([noiseless] if noiseless else [],
                                             NOISELESS_COLUMNS)
    if noisy is not None or not results:
        files["delta_sweep.csv"] = rows_to_csv(noisy["delta_sweep"] if noisy else [],
                                               DELTA_COLUMNS)
        files["eps_sweep.csv"] = rows_to_csv(noisy["eps_sweep"] if noisy else [],
                                             EPS_COLUMNS)
    for name, text in sorted(files.items()):
        p = os.path.join(out_dir, name)
        _atomic_write(p, text)
        paths.append(p)
    return paths


def run_scenario(s, mode=None):
    """Run the sections a scenario asks for; returns ``(results, provenance)``."""
    mode = mode or s.cfg.get("mode", "both" if s.deltas else "noiseless")
    results = {}
    if mode in ("noiseless", "both"):
        results["noiseless"] = run_noiseless_experiment(s)
    if mode in ("noisy", "both"):
        results["noisy"] = run_noisy_experiment(s)
    provenance = {"seed": s.seed, "config": s.cfg, "name": s.name,
                  "psf": s.psf.to_dict(), "measure": s.measure.to_dict()}
    return results, provenance
