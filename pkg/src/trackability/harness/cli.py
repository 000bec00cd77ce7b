"""Command-line entry point: ``trackability <subcommand> [flags]``.

Exit codes: 0 success, 1 invalid input, 2 enumeration budget exceeded or E0
non-convergence, 3 verification failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
import time
from pathlib import Path

from .. import __version__
from ..bounds import E0ConvergenceError, ParameterError, e0_maximize
from ..dist import TruncatedLawError, renyi_entropy
from ..process import BudgetExceeded, ConfigError, channel_from_config, pmf_from_config
from .experiment import ERROR_COLUMNS, evaluate_errors, load_config, parse_config, run_experiment
from .io import csv_text, dumps
from .verify import PROPERTIES, verify_suite

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_ALPHAS = [0.0, 0.5, 1.0, 2.0, math.inf]
DEFAULT_RHOS = [0.25, 0.5, 1.0, 2.0, 4.0]

EXPLANATIONS = {
    "necessary_terms": (
        "lhs_t = -(1/(rho t)) log E[ E[exp(-(rho/q) i(X_t; Y_1:t)) | Y_1:t]^q ]\n"
        "rhs_t = (1/t) H_alpha(X_t),  alpha = (q-1)/(q-rho-1),  q > rho + 1\n"
        "Order-m tracking requires liminf lhs_t >= limsup rhs_t for rho in (0, m]."
    ),
    "bounded_support_moment": (
        "E|X|^rho + 1 >= [3 + log(M_- M_+)]^(-rho) exp(rho H_{1/(1+rho)}(X))\n"
        "for X supported on [-M_-, M_+]; M_-, M_+ padded up to 1."
    ),
    "zeta_moment": "E|X|^m + 1 >= [1 + 2 zeta(m/rho)]^(-rho) exp(rho H_{1/(1+rho)}(X)),  0 < rho < m.",
    "gallager_e0": (
        "E0(rho, P_Y|X, P_X) = -log sum_y ( sum_x P(x) P(y|x)^{1/(1+rho)} )^{1+rho}\n"
        "                    = -log E[ E[exp(-(rho/(1+rho)) i(X;Y)) | Y]^{1+rho} ]\n"
        "Profile row: E0(m, P_Y1:t|X1:t, P_X1:t)/(m t) against R log 2."
    ),
    "anytime_bound_check": "R log 2 <= E0(m)/m with E0(m) = max over input laws of E0(m, P_Y|X, P_X).",
    "gartner_ellis": "(1/(rho t)) log E[exp(rho i(X_1:t; Y_1:t))] against R log 2.",
    "jensen_chain": (
        "E[E[exp(-(rho/(1+rho)) i)|Y]^{1+rho}]^{-1} <= E[E[exp(rho i)|Y]^{-1}]^{-1} <= E[exp(rho i)]"
    ),
    "reverse_holder": (
        "E[P(X|y)^{-rho/(rho+1)}|y]^{rho+1} >= E[exp(-rho i/(p(rho+1)))|y]^{p(rho+1)}\n"
        "                                  x E[P_X(X)^{rho/((p-1)(rho+1))}|y]^{(1-p)(rho+1)},  p > 1"
    ),
    "map_error_bound": (
        "E d(X, MAP) <= zeta(s) sum_y P(y) sum_x P(x|y)^{1/(rho+1)} [sum_x' P(x'|y)^{1/(rho+1)} d(x,x')^{s/rho}]^rho\n"
        "with d(x, x') = |x - x'|^metric_power."
    ),
    "sufficient_map": (
        "E|X - MAP|^m <= zeta(s) E[ tau(X,Y)^m P(X|Y)^{-m/(m+1)} ],\n"
        "tau(x, y) = E[ P(X|Y)^{-m/(m+1)} |X - x|^s | Y = y ]."
    ),
    "sufficient_rho": (
        "For the rho-estimator with rho = s m (m+1) and K = E[P(X|Y)^{-m/(m+1)} | Y]:\n"
        "E|X - est|^m <= zeta(s) E[K^{m+1} / J] <= zeta(s) E[K^{p(m+1)}]^{1/p} E[J^{p/(1-p)}]^{(p-1)/p}\n"
        "where J(y) is the largest c such that some x has P(x|y)/P(x'|y) >= c |x - x'|^rho for all x'."
    ),
}


def _read_json(path):
    if path is None:
        raise ConfigError("--config", "this subcommand needs --config <path>")
    try:
        return load_config(path)
    except OSError as e:
        raise ConfigError("--config", str(e)) from None


def _emit(text: str, out, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    print(path / name)


def _tag(obj) -> str:
    return hashlib.sha256(dumps(obj).encode()).hexdigest()[:16]


def cmd_entropy(args) -> int:
    obj = _read_json(args.config)
    pmf = pmf_from_config(obj.get("pmf", obj), "pmf")
    alphas = [float(a) for a in obj.get("alphas", DEFAULT_ALPHAS)] if "pmf" in obj else DEFAULT_ALPHAS
    rows = [[a, renyi_entropy(pmf, a)] for a in alphas]
    _emit(csv_text(["alpha", "entropy"], rows), args.out, f"entropy-{_tag(obj)}.csv")
    return EXIT_OK


def cmd_e0(args) -> int:
    obj = _read_json(args.config)
    ch = channel_from_config(obj.get("channel", obj), "channel")
    rhos = [float(r) for r in obj.get("rho", DEFAULT_RHOS)] if "channel" in obj else DEFAULT_RHOS
    seed = args.seed if args.seed is not None else 0
    rows = []
    for rho in rhos:
        if not rho > 0:
            raise ParameterError("rho", "must be > 0")
        pmf, value = e0_maximize(ch, rho, seed=seed)
        mass = [pmf.prob(x) for x in ch.input_alphabet]
        rows.append([rho, value, value / rho, " ".join(f"{v:.17g}" for v in mass)])
    _emit(csv_text(["rho", "e0", "e0_over_rho", "input"], rows), args.out, f"e0-{_tag(obj)}.csv")
    return EXIT_OK


def _experiment(args):
    raw = dict(_read_json(args.config))
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.budget is not None:
        raw["budget"] = args.budget
    if args.out is not None:
        raw["output_dir"] = args.out
    return parse_config(raw)


def cmd_bounds(args) -> int:
    cfg = _experiment(args)
    manifest = run_experiment(cfg)
    for f in manifest.files:
        print(cfg.output_dir / f["name"])
    print(cfg.output_dir / f"manifest-{manifest.config_digest}.json")
    return EXIT_OK


def cmd_simulate(args) -> int:
    raw = dict(_read_json(args.config))
    raw.setdefault("mc", {"replications": 10_000})
    raw["bounds"] = []
    if not raw.get("estimators"):
        raw["estimators"] = [{"kind": "map", "m": 1}]
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.budget is not None:
        raw["budget"] = args.budget
    if args.out is not None:
        raw["output_dir"] = args.out
    cfg = parse_config(raw)
    text = csv_text(ERROR_COLUMNS, evaluate_errors(cfg))
    _emit(text, None if args.out is None else cfg.output_dir, f"errors-{cfg.digest}.csv")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.out) if args.out is not None else Path("verify-out")
    t0 = time.perf_counter()

    def progress(res):
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name} failures={res.failures}/{res.instances} "
              f"worst_slack={res.worst_slack:.3e}", file=sys.stderr, flush=True)

    seed = args.seed if args.seed is not None else 0
    result = verify_suite(seed, args.intensity, out, mutate=args.mutate, progress=progress)
    sys.stdout.write(result.table_csv())
    print(f"{len(result.results)} properties in {time.perf_counter() - t0:.1f} s; table in {out}",
          file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_VERIFY


def cmd_explain(args) -> int:
    names = [args.name] if args.name else sorted(EXPLANATIONS)
    for name in names:
        if name not in EXPLANATIONS:
            raise ConfigError("name", f"unknown bound {name!r}; known: {', '.join(sorted(EXPLANATIONS))}")
        print(f"[{name}]")
        print(EXPLANATIONS[name])
        print()
    if not args.name:
        print("verification properties: " + ", ".join(p.name for p in PROPERTIES))
    return EXIT_OK


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code, keeping 2 for budget errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trackability", description="Finite-horizon tracking bounds laboratory.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON input file")
    common.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory (stdout when omitted, where applicable)")
    common.add_argument("--budget", type=_positive, help="enumeration atom budget")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, func, helptext in (
        ("entropy", cmd_entropy, "Renyi entropy profile of a pmf"),
        ("e0", cmd_e0, "maximized E0 over a grid of rho for a channel"),
        ("bounds", cmd_bounds, "run a full experiment config"),
        ("simulate", cmd_simulate, "Monte Carlo estimator error profiles"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.set_defaults(func=func)
    p = sub.add_parser("verify", parents=[common], help="randomized property suite")
    p.add_argument("--intensity", choices=["quick", "full"], default="quick")
    p.add_argument("--mutate", choices=["bounded_support"], help="self-test: flip one inequality and expect failure")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("explain", help="print the formula behind each bound")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, E0ConvergenceError) as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ParameterError, TruncatedLawError, ValueError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
