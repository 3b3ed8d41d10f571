"""Command-line entry point.

Exit codes: 0 ok, 1 input error, 2 internal assertion, 3 verification or
statistical failure. Every numeric flag can also be set through an
environment variable ``SINKFLOW_<FLAG>`` (e.g. ``SINKFLOW_TOLERANCE``);
an explicit flag wins.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .documents import (
    DocumentError,
    dump,
    profile_csv,
    read_result,
    read_spec,
    result_document,
    verify_result,
)
from .evaluator import MAX_ORACLE_SLICES, Configuration, brute_force_oracle, evaluate_strategy
from .model import DEFAULT_TOL, EnergyProfile, Strategy
from .optimizer import OptimizerError, compute_optimal
from .simulator import ModelMismatchError, SimConfig, compare, flake_rate, simulate

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_FAILED = 0, 1, 2, 3
ENV_PREFIX = "SINKFLOW_"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors (exit 1), not argparse's default 2
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _env(name: str, cast, default):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise InputError(f"environment variable {ENV_PREFIX + name.upper()}={raw!r} is not a valid {cast.__name__}")


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {output}: {exc.strerror}") from None
    print(f"wrote {output}", file=sys.stderr)


def _read_spec(path):
    try:
        return read_spec(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _read_result(path):
    try:
        return read_result(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_optimize(args) -> int:
    spec, label = _read_spec(args.spec)
    sol = compute_optimal(spec, args.tolerance)
    doc = result_document(spec, sol.strategy, sol.flow, label, args.tolerance, source="optimize")
    _emit(dump(doc), args.output)
    return EXIT_OK


def _parse_p(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--p: expected comma-separated numbers, got {text!r}") from None


def cmd_evaluate(args) -> int:
    spec, label = _read_spec(args.spec)
    p = _parse_p(args.p)
    if len(p) != spec.n:
        raise InputError(f"--p: {len(p)} values for {spec.n} slices")
    try:
        strategy = Strategy(p)
    except ValueError as exc:
        raise InputError(f"--p: {exc}") from None
    flow, _ = evaluate_strategy(Configuration(spec, strategy))
    doc = result_document(spec, strategy, flow, label, args.tolerance, source="evaluate")
    _emit(dump(doc), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = _read_result(args.result)
    problems, report = verify_result(doc, args.tolerance)
    e = report.profile.e
    print(f"max per-sensor energy {_fmt(report.max_value)} at slice k={report.k + 1}"
          f", l={'-' if report.l is None else report.l + 1}")
    print(f"left_condition  (p[k+1] == 0): {_cond(report.left_condition)}")
    print(f"right_condition (p[l+1] == 1): {_cond(report.right_condition)}")
    print("per-sensor energy: " + " ".join(_fmt(x) for x in e))
    if problems:
        print("FAILED: " + ", ".join(problems))
        return EXIT_FAILED
    print("OK: optimal and consistent")
    return EXIT_OK


def _cond(c) -> str:
    return "void" if c is None else ("holds" if c else "VIOLATED")


def cmd_oracle(args) -> int:
    spec, _ = _read_spec(args.spec)
    if spec.n > MAX_ORACLE_SLICES:
        raise InputError(f"oracle: {spec.n} slices exceeds the exhaustive limit of {MAX_ORACLE_SLICES}")
    try:
        orc = brute_force_oracle(spec, args.step, jobs=args.jobs)
    except ValueError as exc:
        raise InputError(f"oracle: {exc}") from None
    sol = compute_optimal(spec, args.tolerance)
    opt_life = sol.profile.lifespan
    slack = orc.lifespan_slack(sol.profile.max_energy)
    gap = opt_life - orc.lifespan
    print(f"{'':10} {'lifespan':>16} {'max e':>16}  p")
    print(f"{'optimizer':10} {_fmt(opt_life):>16} {_fmt(sol.profile.max_energy):>16}  "
          + " ".join(_fmt(x) for x in sol.strategy.p))
    print(f"{'oracle':10} {_fmt(orc.lifespan):>16} {_fmt(orc.max_energy):>16}  "
          + " ".join(_fmt(x) for x in orc.strategy.p))
    print(f"grid step {args.step}, {orc.points} points; lifespan gap (optimizer - oracle) {gap:.3e}; "
          f"slack bound {slack:.3e} (energy slack {orc.energy_slack:.3e})")
    if opt_life < orc.lifespan - slack:
        print("FAILED: oracle beats the optimizer by more than the slack bound")
        return EXIT_FAILED
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, _ = _read_spec(args.spec)
    doc = _read_result(args.result)
    if doc.spec != spec:
        raise InputError("simulate: the result document was produced for a different network")
    config = SimConfig(
        replications=args.replications,
        seed=args.seed,
        tolerance_sigmas=args.sigmas,
        jobs=args.jobs,
        round_g=args.round,
    )
    try:
        sim = simulate(spec, doc.strategy, config)
    except ValueError as exc:
        raise InputError(f"simulate: {exc}") from None
    # the claimed profile is the reference; rounded counts change it, so recompute then
    if sim.rounded:
        print("note: g rounded to " + " ".join(_fmt(x) for x in sim.g))
        _, analytic = evaluate_strategy(Configuration(spec.with_g(sim.g), doc.strategy))
    else:
        analytic = EnergyProfile(doc.e)
    try:
        cmp = compare(analytic, sim, config)
    except ModelMismatchError as exc:
        print(f"FAILED: {exc}")
        return EXIT_FAILED
    print(f"{'slice':>5} {'analytic e':>14} {'empirical e':>14} {'std err':>12} {'z':>8}")
    for i, a, s, se, z in cmp.rows(analytic, sim):
        print(f"{i + 1:>5} {_fmt(a):>14} {_fmt(s):>14} {se:>12.4g} {z:>8.3f}")
    print(f"{config.replications} replications, seed {config.seed}, threshold {config.tolerance_sigmas} sigma "
          f"(chance of a false alarm ~{flake_rate(config.tolerance_sigmas, spec.n):.2%})")
    if not cmp.passed:
        print(f"FAILED: slice {cmp.worst + 1} off by {cmp.z[cmp.worst]:.2f} standard errors")
        return EXIT_FAILED
    print("OK")
    return EXIT_OK


def cmd_profile_csv(args) -> int:
    doc = _read_result(args.result)
    _emit(profile_csv(doc), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sinkflow", description="Optimal slide/eject strategies for sliced sensor networks.")
    ap.add_argument("--version", action="version", version=f"sinkflow {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--tolerance", type=float, default=_env("tolerance", float, DEFAULT_TOL),
                        help="relative tolerance for equality tests (default 1e-9)")
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--jobs", type=int, default=_env("jobs", int, 1), help="worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="compute the optimal strategy for a spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a given strategy on a spec")
    p.add_argument("spec")
    p.add_argument("--p", required=True, help="comma-separated sliding probabilities, slice 1 first")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", parents=[common], help="re-check a result document")
    p.add_argument("result")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", parents=[common], help="compare the optimizer against grid search")
    p.add_argument("spec")
    p.add_argument("--step", type=float, default=_env("step", float, 0.01))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of a result document")
    p.add_argument("spec")
    p.add_argument("result")
    p.add_argument("--replications", type=int, default=_env("replications", int, 100_000))
    p.add_argument("--seed", type=int, default=_env("seed", int, 0))
    p.add_argument("--sigmas", type=float, default=_env("sigmas", float, 3.0))
    p.add_argument("--round", action="store_true", help="round non-integer g to whole messages")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile-csv", parents=[common], help="write the per-slice table as CSV")
    p.add_argument("result")
    p.set_defaults(func=cmd_profile_csv)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (InputError, DocumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OptimizerError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
