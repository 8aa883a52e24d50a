"""Command-line interface.

Exit codes: 0 ok, 1 validation failed, 2 unreadable input, 3 model error,
4 numeric error, 5 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .catalog import EXAMPLES, get_example
from .errors import InvalidArgument, ModelError, NumericError
from .model import Mode, UrnSpec, build_replacement_matrix, validate
from .moments import clt_params, exact_cov, exact_mean, moment_trajectory
from .simulator import Thresholds, compare, monte_carlo
from .spectral import DEFAULT_TOL, decompose

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_MODEL = 3
EXIT_NUMERIC = 4
EXIT_VERIFY = 5


class InputError(Exception):
    pass


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _emit_json(data: dict, out: str | None) -> None:
    text = json.dumps(_clean(data), indent=2) + "\n"
    _emit_text(text, out)


def _emit_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from None


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
    return buf.getvalue()


def _load_spec(args) -> UrnSpec:
    if args.example:
        spec = get_example(args.example)
    else:
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise InputError(f"cannot read spec {args.spec}: {exc.strerror or exc}") from None
        try:
            spec = UrnSpec.from_json(text)
        except InvalidArgument as exc:
            raise InputError(f"unreadable spec {args.spec}: {exc}") from None
    if getattr(args, "mode", None):
        spec = spec.with_mode(args.mode)
    return spec


# ---------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    spec = _load_spec(args)
    report = validate(spec)
    _emit_json(report.to_dict(), args.out)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_expand(args) -> int:
    spec = _load_spec(args)
    M = build_replacement_matrix(spec.core, spec.s)
    header = ["sample"] + [f"color_{i + 1}" for i in range(spec.k)]
    rows = [[c.label, *map(int, r)] for c, r in zip(M.compositions, M.rows)]
    _emit_text(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = _load_spec(args)
    dec = decompose(spec.core, tol=args.tol)
    _emit_json(dec.to_dict(), args.out)
    return EXIT_OK


def cmd_moments(args) -> int:
    spec = _load_spec(args).require_valid()
    traj = moment_trajectory(spec, args.n, every=args.every)
    k = spec.k
    iu = np.triu_indices(k)
    header = ["n"] + [f"mu_{i + 1}" for i in range(k)]
    header += [f"sigma_{i + 1}{j + 1}" if k < 10 else f"sigma_{i + 1}_{j + 1}" for i, j in zip(*iu)]
    rows = ([int(n), *mu, *sig[iu]] for n, mu, sig in zip(traj.ns, traj.mu, traj.sigma))
    _emit_text(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    spec = _load_spec(args).require_valid()
    data = clt_params(spec).to_dict()
    if args.n is not None:
        data["exact"] = {"n": args.n, "mode": spec.mode.value,
                         "mean": exact_mean(spec, args.n),
                         "cov": exact_cov(spec, args.n)}
    _emit_json(data, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _load_spec(args).require_valid()
    summary = monte_carlo(spec, args.n, args.reps, args.seed, threads=args.threads)
    data = summary.to_dict()
    data["spec"] = spec.to_dict()
    if args.csv:
        header = ["rep"] + [f"x_{i + 1}" for i in range(spec.k)]
        rows = ([r, *map(int, x)] for r, x in enumerate(summary.terminal))
        text = _csv_text(header, rows)
        try:
            Path(args.csv).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {args.csv}: {exc}") from None
    if not args.record_y:
        data.pop("yy_hat", None)
        data.pop("yy_se", None)
    _emit_json(data, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _load_spec(args).require_valid()
    theory = clt_params(spec) if spec.is_irreducible else None
    exact = moment_trajectory(spec, args.n, every=max(args.n, 1))
    summary = monte_carlo(spec, args.n, args.reps, args.seed, threads=args.threads,
                          keep_terminal=False)
    th = Thresholds(mean_z=args.mean_z, cov_z=args.cov_z, limit_z=args.limit_z,
                    critical_rtol=args.critical_rtol, skew_max=args.skew_max,
                    kurt_max=args.kurt_max)
    report = compare(summary, theory, exact, th)
    report["seed"] = args.seed
    _emit_json(report, args.out)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


# ---------------------------------------------------------------- parser

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="urnlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mode=True):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--spec", help="UrnSpec JSON file")
        src.add_argument("--example", choices=sorted(EXAMPLES), help="built-in example urn")
        sp.add_argument("--out", help="output file (default stdout)")
        if mode:
            sp.add_argument("--mode", choices=[m.value for m in Mode], help="override sampling mode")

    sp = sub.add_parser("validate", help="check the model rules")
    common(sp, mode=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("expand", help="replacement matrix as CSV")
    common(sp, mode=False)
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("classify", help="spectral decomposition and regime")
    common(sp, mode=False)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="eigenvalue clustering tolerance")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("moments", help="exact mean and covariance trajectory as CSV")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, required=True)
    sp.add_argument("--every", type=_positive_int, default=1, help="record every k-th step")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("asymptotics", help="limit-theorem parameters")
    common(sp)
    sp.add_argument("--n", type=_nonneg_int, help="also report exact moments at step n")
    sp.set_defaults(func=cmd_asymptotics)

    for name, func, hlp in (("simulate", cmd_simulate, "Monte Carlo summary"),
                            ("verify", cmd_verify, "Monte Carlo vs exact moments and limits")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--n", type=_nonneg_int, required=True)
        sp.add_argument("--reps", type=_positive_int, default=1000)
        sp.add_argument("--seed", type=_nonneg_int, default=0)
        sp.add_argument("--threads", type=_nonneg_int, default=None,
                        help="numba threads (default URNLAB_THREADS, 0 = all)")
        sp.set_defaults(func=func)
        if name == "simulate":
            sp.add_argument("--record-y", action="store_true",
                            help="include last-step martingale diagnostics")
            sp.add_argument("--csv", help="per-replication terminal states")
        else:
            d = Thresholds()
            sp.add_argument("--mean-z", type=float, default=d.mean_z)
            sp.add_argument("--cov-z", type=float, default=d.cov_z)
            sp.add_argument("--limit-z", type=float, default=d.limit_z)
            sp.add_argument("--critical-rtol", type=float, default=d.critical_rtol)
            sp.add_argument("--skew-max", type=float, default=d.skew_max)
            sp.add_argument("--kurt-max", type=float, default=d.kurt_max)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "reps", None) is not None and args.reps < 2:
        print("urnlab: error: --reps must be at least 2", file=sys.stderr)
        return EXIT_IO
    try:
        return args.func(args)
    except InputError as exc:
        print(f"urnlab: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ModelError as exc:
        print(f"urnlab: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NumericError as exc:
        print(f"urnlab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgument as exc:
        print(f"urnlab: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
