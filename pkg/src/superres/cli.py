"""Command-line entry point: ``superres <subcommand> ...``.

Exit codes: 0 success, 2 hypothesis violation, 1 any other error.
"""

import argparse
import json
import os
import sys

from . import certificates as cert_mod
from .experiment import (ExperimentAbort, Scenario, _atomic_write, dumps, emit_report,
                         run_scenario)
from .measure import AtomicMeasure, GridMeasure
from .metrics import generalized_wasserstein, wasserstein
from .psf import ObservationTensor, TensorPSF, add_noise, forward
from .solver import extract_support, solve_feasibility

OK, ERROR, HYPOTHESIS = 0, 1, 2


def _read(path):
    with open(path) as fh:
        return json.load(fh)


def _load_measure(path):
    obj = _read(path)
    if "grid" in obj:
        return GridMeasure.from_dict(obj)
    return AtomicMeasure.from_dict(obj)


def _emit(text, out):
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    s = Scenario.load(args.config, args.seed)
    delta = float(s.cfg.get("delta", 0.0))
    y = add_noise(forward(s.psf, s.measure), delta, s.seed)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "psf.json"), dumps(s.psf.to_dict()))
    _atomic_write(os.path.join(args.out, "measure.json"), dumps(s.measure.to_dict()))
    _atomic_write(os.path.join(args.out, "obs.json"), dumps(y.to_dict()))
    return OK


def cmd_solve(args):
    psf = TensorPSF.load(args.psf)
    y = ObservationTensor.from_dict(_read(args.obs))
    opts = {"method": args.method}
    res = solve_feasibility(psf, y, args.delta_prime, args.grid, opts)
    out = res.to_dict()
    if res.estimate.weights.size:
        out["atoms"] = extract_support(res).to_dict()
    _emit(dumps(out), args.out)
    return OK


def cmd_certify(args):
    if args.config:
        s = Scenario.load(args.config, args.seed)
        psf, Theta = s.psf, s.measure.locations
    else:
        psf = TensorPSF.load(args.psf)
        m = _load_measure(args.measure)
        Theta = (m.to_atomic() if isinstance(m, GridMeasure) else m).locations
    kw = {"grid_n": args.fit_grid, "verify_n": args.verify_grid, "strict": False}
    if args.kind == "noiseless":
        certs = {"noiseless": cert_mod.build_noiseless_Q(psf, Theta, **kw)}
    elif args.kind == "away":
        certs = {"away": cert_mod.build_away_Q(psf, Theta, args.eps,
                                               waive_t_star=args.waive_t_star, **kw)}
    else:
        patterns = None
        if args.pattern:
            patterns = [tuple(1 if c == "+" else -1 for c in args.pattern)]
        fam = cert_mod.build_near_family(psf, Theta, args.eps, patterns,
                                         waive_t_star=args.waive_t_star, **kw)
        certs = {"near" + "".join("+" if v > 0 else "-" for v in p): c
                 for p, c in fam.items()}
    doc = {name: c.to_dict() for name, c in certs.items()}
    _emit(dumps(doc), args.out)
    return OK if all(c.report.get("pass") for c in certs.values()) else ERROR


def cmd_distance(args):
    a, b = _load_measure(args.a), _load_measure(args.b)
    if args.mode == "w":
        value, plan = wasserstein(a, b)
        doc = {"mode": "w", "value": value, "plan": plan.to_dict()}
    else:
        value, plan, discarded = generalized_wasserstein(a, b)
        doc = {"mode": "gw", "value": value, "plan": plan.to_dict(),
               "discarded": list(discarded)}
    _emit(dumps(doc), args.out)
    return OK


def cmd_experiment(args):
    s = Scenario.load(args.config, args.seed)
    try:
        results, prov = run_scenario(s, args.mode)
    except ExperimentAbort as exc:
        emit_report({"noisy": exc.report}, args.out, "json",
                    {"seed": s.seed, "config": s.cfg, "aborted": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    emit_report(results, args.out, args.format, prov)
    if any(r.get("hypothesis_violations") for r in results.values()):
        return HYPOTHESIS
    return OK


def build_parser():
    p = argparse.ArgumentParser(prog="superres", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("simulate", help="forward-simulate a scenario")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True, help="output directory")
    q.add_argument("--seed", type=int)
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("solve", help="solve the feasibility program")
    q.add_argument("--psf", required=True)
    q.add_argument("--obs", required=True)
    q.add_argument("--delta-prime", type=float, default=0.0)
    q.add_argument("--grid", type=int)
    q.add_argument("--method", default="active-set",
                   choices=["active-set", "projected-gradient"])
    q.add_argument("--out")
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("certify", help="build and verify a dual certificate")
    q.add_argument("--kind", choices=["noiseless", "away", "near"], required=True)
    q.add_argument("--config")
    q.add_argument("--psf")
    q.add_argument("--measure")
    q.add_argument("--eps", type=float, default=0.1)
    q.add_argument("--pattern", help="sign pattern such as +- (near only)")
    q.add_argument("--fit-grid", type=int, default=512)
    q.add_argument("--verify-grid", type=int)
    q.add_argument("--waive-t-star", action="store_true")
    q.add_argument("--seed", type=int)
    q.add_argument("--out")
    q.set_defaults(func=cmd_certify)

    q = sub.add_parser("distance", help="(generalized) Wasserstein distance")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--mode", choices=["w", "gw"], default="gw")
    q.add_argument("--out")
    q.set_defaults(func=cmd_distance)

    q = sub.add_parser("experiment", help="run a scenario and write reports")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True, help="output directory")
    q.add_argument("--seed", type=int)
    q.add_argument("--format", choices=["csv", "json"], default="json")
    q.add_argument("--mode", choices=["noiseless", "noisy", "both"])
    q.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "certify" and not args.config and not (args.psf and args.measure):
        print("error: certify needs --config or both --psf and --measure", file=sys.stderr)
        return ERROR
    try:
        return args.func(args)
    except cert_mod.HypothesisError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return HYPOTHESIS
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
