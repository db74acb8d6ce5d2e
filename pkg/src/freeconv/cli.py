"""Command-line front end for batch runs with JSON/CSV output.

Exit codes: 0 ok, 2 parse error, 3 domain/precondition error,
4 numerical non-convergence.  Every output carries a header echoing the
package version, the command line, and the seed, and every run is fully
determined by its flags.  Exact rationals print as "p/q"; floats print
with 12 significant digits so zero-vs-nonzero verdicts stay lossless in
logs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import shlex
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .errors import ConvergenceError, DomainError, ParseError
from .measures import (
    Measure,
    MomentSequence,
    format_fraction,
    measure_from_json,
    moments,
)
from .transforms import boolean_from_moments, free_from_moments
from .word_engine import Word
from .convolution import (
    boxplus_moments,
    boxtimes_moments,
    boxtimes_via_subordination,
    boxtimes_word_oracle,
    fractional_diagnostics,
    solve_subordination,
)
from .characterize import (
    QuadraticFormSpec,
    freeness_dichotomy,
    pattern_degree,
    preset_sample_mean_variance,
    validate_spec,
)
from .matrix_lab import (
    MatrixEnsembleSpec,
    estimate_word_traces,
    exact_word_moment,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_NUMERIC = 4


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, complex):
        return f"{value.real:.12g}{value.imag:+.12g}j"
    return str(value)


@dataclass
class RunConfig:
    """Full description of one CLI run, echoed into the output header."""

    command: str
    argv: tuple[str, ...]
    seed: Optional[int] = None
    threads: int = 1
    output: Optional[str] = None
    fmt: str = "json"
    params: dict = field(default_factory=dict)

    def header(self) -> dict:
        meta = {
            "version": __version__,
            "command": shlex.join(["freeconv", *self.argv]),
            "threads": self.threads,
        }
        if self.seed is not None:
            meta["seed"] = self.seed
        return meta


def _emit(config: RunConfig, payload: dict, columns: Sequence[str], rows: list) -> None:
    if config.fmt == "json":
        doc = {"meta": config.header(), **payload, "rows": rows}
        text = json.dumps(doc, indent=2, default=_fmt)
    else:
        buf = io.StringIO()
        for key, value in config.header().items():
            buf.write(f"# {key}={value}\n")
        for key, value in payload.items():
            buf.write(f"# {key}={_fmt(value)}\n")
        writer = csv.writer(buf)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
        text = buf.getvalue()
    if config.output:
        with open(config.output, "w") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_measure(path: str) -> Measure:
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return measure_from_json(text)


def _load_form_spec(path: str) -> QuadraticFormSpec:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid form JSON: {exc}") from exc
    try:
        return QuadraticFormSpec(data["A"], data["b"])
    except KeyError as exc:
        raise ParseError(f"form JSON missing field {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_moments(args, config: RunConfig) -> None:
    mu = _load_measure(args.measure)
    seq = moments(mu, args.order)
    rows = [(k, format_fraction(seq.m(k))) for k in range(1, args.order + 1)]
    _emit(config, {"measure": args.measure, "order": args.order}, ("k", "m_k"), rows)


def cmd_cumulants(args, config: RunConfig) -> None:
    mu = _load_measure(args.measure)
    seq = moments(mu, args.order)
    if args.kind == "boolean":
        values = boolean_from_moments(seq).values
        label = "r_k"
    else:
        values = free_from_moments(seq).values
        label = "kappa_k"
    rows = [(k + 1, format_fraction(v)) for k, v in enumerate(values)]
    _emit(
        config,
        {"measure": args.measure, "order": args.order, "kind": args.kind},
        ("k", label),
        rows,
    )


def cmd_boxplus(args, config: RunConfig) -> None:
    m1 = moments(_load_measure(args.mu1), args.order)
    m2 = moments(_load_measure(args.mu2), args.order)
    out = boxplus_moments(m1, m2)
    rows = [(k, format_fraction(out.m(k))) for k in range(1, args.order + 1)]
    _emit(config, {"order": args.order}, ("k", "m_k"), rows)


def cmd_boxtimes(args, config: RunConfig) -> None:
    mu1 = _load_measure(args.mu1)
    mu2 = _load_measure(args.mu2)
    p = args.order
    m1 = moments(mu1, p)
    m2 = moments(mu2, p)
    payload: dict = {"order": p, "method": args.method}

    if args.method == "taylor":
        out = boxtimes_moments(m1, m2, p)
        payload["moments"] = [format_fraction(v) for v in out.moments]
        rows = [(k, format_fraction(out.m(k))) for k in range(1, p + 1)]
        _emit(config, payload, ("k", "m_k"), rows)
    elif args.method == "oracle":
        out = boxtimes_word_oracle(m1, m2, p)
        payload["moments"] = [format_fraction(v) for v in out.moments]
        rows = [(k, format_fraction(out.m(k))) for k in range(1, p + 1)]
        _emit(config, payload, ("k", "m_k"), rows)
    elif args.method == "subordination":
        ms, residuals, iterations = boxtimes_via_subordination(mu1, mu2, p)
        payload["moments"] = [_fmt(v) for v in ms]
        payload["residuals"] = [residuals[0], residuals[1]]
        payload["iterations"] = iterations
        rows = [(k, _fmt(ms[k - 1])) for k in range(1, p + 1)]
        _emit(config, payload, ("k", "m_k"), rows)
    else:  # all
        taylor = boxtimes_moments(m1, m2, p)
        oracle = boxtimes_word_oracle(m1, m2, p)
        ms, residuals, iterations = boxtimes_via_subordination(mu1, mu2, p)
        payload["taylor_equals_oracle"] = taylor.moments == oracle.moments
        payload["max_subordination_discrepancy"] = max(
            abs(float(taylor.m(k)) - ms[k - 1]) for k in range(1, p + 1)
        )
        payload["residuals"] = [residuals[0], residuals[1]]
        payload["iterations"] = iterations
        rows = [
            (
                k,
                format_fraction(taylor.m(k)),
                format_fraction(oracle.m(k)),
                _fmt(ms[k - 1]),
            )
            for k in range(1, p + 1)
        ]
        _emit(config, payload, ("k", "taylor", "oracle", "subordination"), rows)


def cmd_subordinate(args, config: RunConfig) -> None:
    mu1 = _load_measure(args.mu1)
    mu2 = _load_measure(args.mu2)
    if args.z is not None:
        parts = args.z.split(",")
        try:
            z = complex(float(parts[0]), float(parts[1]) if len(parts) > 1 else 0.0)
        except ValueError as exc:
            raise ParseError(f"bad evaluation point {args.z!r}") from exc
        points = [z]
    else:
        points = [complex(-(10.0 ** (-k / 10.0)), 0.0) for k in range(1, args.grid + 1)]
    rows = []
    for z in points:
        sol = solve_subordination(mu1, mu2, z, tol=args.tol, max_iter=args.max_iter)
        rows.append(
            (
                _fmt(z),
                _fmt(sol.z1),
                _fmt(sol.z2),
                _fmt(sol.k_value),
                _fmt(sol.residuals[0]),
                _fmt(sol.residuals[1]),
                sol.iterations,
            )
        )
    _emit(
        config,
        {"tol": args.tol},
        ("z", "Z1", "Z2", "K", "residual_1", "residual_2", "iterations"),
        rows,
    )


def cmd_diagnose(args, config: RunConfig) -> None:
    mu = _load_measure(args.measure)
    report = fractional_diagnostics(mu, args.alpha)
    payload = {
        "alpha": report.alpha,
        "sandwich": f"{_fmt(report.lower_bound)} <= {_fmt(report.integral_value)}"
        f" <= {_fmt(report.upper_bound)}",
        "c_mu": report.c_mu,
        "m_alpha": report.m_alpha,
        "verdict": report.verdict,
    }
    rows = [
        (
            report.alpha,
            _fmt(report.lower_bound),
            _fmt(report.integral_value),
            _fmt(report.upper_bound),
            report.verdict,
        )
    ]
    _emit(
        config,
        payload,
        ("alpha", "lower", "integral", "upper", "verdict"),
        rows,
    )


def cmd_characterize(args, config: RunConfig) -> None:
    if args.preset:
        if args.preset != "mean-variance":
            raise ParseError(f"unknown preset {args.preset!r}")
        spec = preset_sample_mean_variance(args.n)
    elif args.spec:
        spec = _load_form_spec(args.spec)
    else:
        raise ParseError("provide a form spec file or --preset mean-variance")
    report = validate_spec(spec)
    if not report.passed:
        raise DomainError("inadmissible form: " + "; ".join(report.failures))
    marginal = moments(_load_measure(args.marginal), args.max_len)
    result = freeness_dichotomy(spec, marginal, args.max_len)
    rows = [
        (
            " ".join(name for name, _ in pattern),
            pattern_degree(pattern),
            format_fraction(dev),
        )
        for pattern, dev in result.deviations
    ]
    payload = {
        "verdict": result.verdict,
        "max_abs_deviation": format_fraction(result.max_abs_deviation),
        "max_word_length": result.max_word_length,
        "note": result.note,
    }
    _emit(config, payload, ("pattern", "degree", "deviation"), rows)


def cmd_matrixlab(args, config: RunConfig) -> None:
    word = Word.from_text(args.word)
    measure = _load_measure(args.measure) if args.measure else None
    spec = MatrixEnsembleSpec(
        dimension=args.N,
        count=max(word.letters),
        kind=args.ensemble,
        seed=args.seed,
        measure=measure,
    )
    estimate = estimate_word_traces(spec, [word], args.trials, max_workers=config.threads)[0]
    try:
        exact = exact_word_moment(spec, word)
    except DomainError:
        exact = None
    z_score = (
        (estimate.mean - exact) / estimate.standard_error
        if exact is not None and estimate.standard_error > 0
        else None
    )
    rows = [
        (
            estimate.expression,
            args.N,
            args.trials,
            _fmt(estimate.mean),
            _fmt(estimate.standard_error),
            _fmt(exact) if exact is not None else "",
            _fmt(z_score) if z_score is not None else "",
        )
    ]
    _emit(
        config,
        {"ensemble": args.ensemble},
        ("word", "N", "trials", "mean", "se", "exact", "z-score"),
        rows,
    )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freeconv",
        description="moment-level free convolution toolkit",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker cap (falls back to FREECONV_THREADS, then 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--output", help="write to this path instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("moments", help="moments of a measure")
    p.add_argument("measure")
    p.add_argument("--order", type=int, required=True)
    add_output_flags(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("cumulants", help="boolean or free cumulants of a measure")
    p.add_argument("measure")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--kind", choices=("boolean", "free"), default="boolean")
    add_output_flags(p)
    p.set_defaults(func=cmd_cumulants)

    p = sub.add_parser("boxplus", help="additive free convolution")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--order", type=int, required=True)
    add_output_flags(p)
    p.set_defaults(func=cmd_boxplus)

    p = sub.add_parser("boxtimes", help="multiplicative free convolution")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--order", type=int, required=True)
    p.add_argument(
        "--method",
        choices=("taylor", "subordination", "oracle", "all"),
        default="taylor",
    )
    add_output_flags(p)
    p.set_defaults(func=cmd_boxtimes)

    p = sub.add_parser("subordinate", help="solve the subordination equations")
    p.add_argument("mu1")
    p.add_argument("mu2")
    p.add_argument("--z", help="evaluation point 're' or 're,im'")
    p.add_argument("--grid", type=int, default=31, help="points z=-10^(-k/10)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=500)
    add_output_flags(p)
    p.set_defaults(func=cmd_subordinate)

    p = sub.add_parser("diagnose", help="fractional moment sandwich")
    p.add_argument("measure")
    p.add_argument("--alpha", type=float, required=True)
    add_output_flags(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("characterize", help="freeness dichotomy for (L, Q)")
    p.add_argument("spec", nargs="?", help="form spec JSON file")
    p.add_argument("marginal", help="marginal measure JSON file")
    p.add_argument("--preset", choices=("mean-variance",))
    p.add_argument("--n", type=int, default=2, help="variable count for the preset")
    p.add_argument("--max-len", type=int, default=8)
    add_output_flags(p)
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("matrixlab", help="Monte Carlo word trace")
    p.add_argument("--word", required=True, help='word text, e.g. "T1 T2 T1 T2"')
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble", choices=("goe", "diagonal"), default="goe")
    p.add_argument("--measure", help="atomic measure JSON for diagonal ensembles")
    add_output_flags(p)
    p.set_defaults(func=cmd_matrixlab)

    return parser


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("FREECONV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE

    config = RunConfig(
        command=args.command,
        argv=tuple(argv),
        seed=getattr(args, "seed", None),
        threads=_resolve_threads(args),
        output=getattr(args, "output", None),
        fmt=getattr(args, "format", "json"),
    )
    try:
        args.func(args, config)
    except ParseError as exc:
        print(f"freeconv: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"freeconv: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"freeconv: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
