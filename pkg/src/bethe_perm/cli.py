"""Command-line front end.  Every command prints one JSON document to stdout.

Exit codes: 0 success (a non-converged run is still a success and is
flagged in the output), 2 bad input, 3 size or feasibility limits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, covers, exact
from .energy import FracCoefficients, special_kappa
from .errors import BethePermError, InfeasibleError, SizeError, SupportError
from .fw import FwOptions, minimize_frac_bethe
from .matrix_io import LogValue, load_matrix
from .spa import SpaOptions, run_spa

LINEAR_LIMIT = 700.0
EXIT_INPUT = 2
EXIT_SIZE = 3


def _log_json(x: float):
    if x == -math.inf:
        return "-inf"
    if x == math.inf:
        return "inf"
    return float(x) + 0.0   # no "-0.0" in output


def _lin_json(x: float):
    if x == -math.inf:
        return 0.0
    return math.exp(x) if abs(x) < LINEAR_LIMIT else None


def _magnitude(prefix: str, v: LogValue) -> dict:
    return {f"log_{prefix}": _log_json(v.log), prefix: _lin_json(v.log)}


def _clean(obj):
    """Make report dicts JSON-safe (non-finite floats as strings, arrays as lists)."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return _log_json(float(obj)) if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cmd_perm(args) -> dict:
    m = load_matrix(args.input)
    v = exact.permanent(m, method=args.method, threads=args.threads)
    return {**_magnitude("perm", v), "method": args.method}


def _spa_opts(args) -> SpaOptions:
    return SpaOptions(max_iters=args.max_iters, tol=args.tol, init=args.init, seed=args.seed)


def cmd_bethe(args) -> dict:
    m = load_matrix(args.input)
    res = run_spa(m, _spa_opts(args))
    out = {
        **_magnitude("perm_bethe", res.log_perm_bethe),
        "gamma": res.gamma,
        "converged": res.converged,
        "iterations": res.iterations_used,
        "oscillation_detected": res.oscillation_detected,
        "method": res.method,
    }
    if args.trace:
        out["trace"] = list(res.pseudo_dual_trace)
    return out


def cmd_cover(args) -> dict:
    m = load_matrix(args.input)
    out = {"M": args.M, "mode": args.mode}
    if args.mode == "enumerate":
        v = covers.degree_M_bethe_exact(m, args.M, threads=args.threads)
        out.update(_magnitude("perm_bethe_M", v))
    else:
        est = covers.degree_M_bethe_sampled(m, args.M, args.samples, seed=args.seed, threads=args.threads)
        out.update(_magnitude("perm_bethe_M", est.estimate))
        out.update({"stderr_log": est.stderr_log, "samples": est.samples, "seed": args.seed})
    return out


def _kappa(spec: str, n: int) -> FracCoefficients:
    if spec == "one":
        return FracCoefficients.ones(n)
    if spec == "special":
        return special_kappa(n)
    if spec.startswith("file:"):
        with open(spec[5:], encoding="utf-8") as fh:
            try:
                return FracCoefficients.from_json(json.load(fh))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"bad kappa file: {exc}") from None
    raise ValueError(f"--kappa must be one, special or file:PATH, got {spec!r}")


def cmd_frac(args) -> dict:
    m = load_matrix(args.input)
    kappa = _kappa(args.kappa, m.n)
    res = minimize_frac_bethe(m, kappa, FwOptions(max_iters=args.max_iters))
    return {
        **_magnitude("perm_frac", LogValue(-res.f_star)),
        "kappa": args.kappa,
        "gamma": res.gamma_star,
        "dual_gap": res.dual_gap,
        "iterations": res.iterations,
        "converged": res.converged,
    }


def cmd_bounds(args) -> dict:
    m = load_matrix(args.input)
    return analysis.bounds_report(m, threads=args.threads).to_dict()


def cmd_analyze(args) -> dict:
    m = load_matrix(args.input)
    vc = analysis.classify_vertex(m)
    out = {"sigma_star": list(vc.sigma), "rho": vc.rho, "verdict": vc.verdict}
    if np.all(m.entries > 0):
        sk = analysis.sinkhorn(m)
        out["sinkhorn"] = {
            "converged": sk.converged,
            "iterations": sk.iterations,
            "log_scale": sk.log_scale,
            "d1": sk.d1,
            "d2": sk.d2,
        }
    else:
        out["sinkhorn"] = None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bethe-perm", description="Permanents and their Bethe approximations.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("input", help='matrix file (.json or .csv) or "-" for stdin')
        sp.add_argument("--threads", type=int, default=1)
        sp.set_defaults(func=func)
        return sp

    sp = add("perm", cmd_perm, "exact permanent")
    sp.add_argument("--method", choices=["brute", "ryser"], default="ryser")

    sp = add("bethe", cmd_bethe, "Bethe permanent by the sum-product algorithm")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iters", type=int, default=10_000)
    sp.add_argument("--init", choices=["uniform", "random"], default="uniform")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trace", action="store_true", help="include the per-iteration pseudo-dual values")

    sp = add("cover", cmd_cover, "degree-M Bethe permanent over M-covers")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--mode", choices=["enumerate", "sample"], default="enumerate")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("frac", cmd_frac, "fractional Bethe permanent")
    sp.add_argument("--kappa", default="one", help="one, special or file:PATH")
    sp.add_argument("--max-iters", type=int, default=20_000)

    add("bounds", cmd_bounds, "exact vs Bethe bound report")
    add("analyze", cmd_analyze, "vertex classification and Sinkhorn summary")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except (SizeError, InfeasibleError, SupportError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_SIZE
    except (BethePermError, ValueError, OSError) as exc:
        # admissibility, parse and shape errors land here
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    json.dump(_clean(out), sys.stdout)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
