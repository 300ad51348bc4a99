"""Command line entry point ``haarlab``.

Exit status: 0 when every check passes, 1 when a check or certificate fails,
2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .carleson import almost_disjoint_decomposition, carleson_constant, chain_structure, condensation_search
from .dyadic import CertificateViolation, DyadicInterval, HaarlabError
from .gamlen_gaudet import build_system, verify_joint_distribution
from .harness import CHECKS
from .io import dumps, read_intervals
from .synthesis import SpaceDescriptor
from .type_constant import EstimateConfig, check_lemma1, check_transfer, estimate_best_constant

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _interval(text: str) -> DyadicInterval:
    try:
        m, k = (int(v) for v in text.replace(",", " ").split())
        return DyadicInterval(m, k)
    except (ValueError, HaarlabError) as exc:
        raise argparse.ArgumentTypeError(f"expected 'level,index', got {text!r}") from exc


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _space(text: str) -> SpaceDescriptor:
    try:
        return SpaceDescriptor.parse(text)
    except HaarlabError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(args, name: str, payload: dict, rows: list[dict] | None = None) -> None:
    if args.format == "csv":
        rows = rows if rows is not None else [{k: v for k, v in payload.items() if not isinstance(v, (list, dict))}]
        buf = io.StringIO()
        fields = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text, suffix = buf.getvalue(), "csv"
    else:
        text, suffix = dumps(payload), "json"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.{suffix}").write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> EstimateConfig:
    return EstimateConfig(restarts=args.restarts, max_iter=args.max_iter, tol=args.tol, seed=args.seed)


def cmd_carleson(args) -> int:
    E = read_intervals(args.input)
    rep = carleson_constant(E)
    payload = {
        "carleson": str(rep.constant),
        "value": float(rep.constant),
        "witness": [rep.witness.level, rep.witness.index],
        "intervals": len(E),
        "max_level": E.max_level,
    }
    _emit(args, "carleson", payload)
    return EXIT_OK


def cmd_decompose(args) -> int:
    E = read_intervals(args.input)
    try:
        cover = almost_disjoint_decomposition(E)
        for part in cover.parts:
            chain_structure(part)
        payload = cover.to_json()
    except CertificateViolation as exc:
        interval = [exc.interval.level, exc.interval.index] if exc.interval else None
        payload = {"violations": [{"interval": interval, "inequality": exc.item, "error": str(exc)}]}
    _emit(args, "decompose", payload)
    return EXIT_FAIL if payload["violations"] else EXIT_OK


def cmd_condense(args) -> int:
    E = read_intervals(args.input)
    w = condensation_search(E, args.depth)
    payload = {
        "root": [w.root.level, w.root.index],
        "depth": w.depth,
        "density": str(w.density),
        "value": float(w.density),
    }
    _emit(args, "condense", payload)
    return EXIT_OK


def cmd_gamlen_gaudet(args) -> int:
    E = read_intervals(args.input)
    root = args.root or condensation_search(E, args.depth).root
    try:
        system = build_system(E, root, args.depth, args.delta, verify=args.verify)
        payload = system.to_json()
        if args.verify:
            report = verify_joint_distribution(system)
            payload["verification"] = {
                "properties": "passed",
                "joint_distribution": "passed",
                "atom_measure": str(report.expected),
            }
    except CertificateViolation as exc:
        _emit(args, "gamlen-gaudet", {"verification": {"failed": exc.item, "error": str(exc)}})
        return EXIT_FAIL
    _emit(args, "gamlen-gaudet", payload)
    return EXIT_OK


def cmd_estimate(args) -> int:
    E = read_intervals(args.input)
    est = estimate_best_constant(E, args.p, args.space, _config(args))
    _emit(args, "estimate-constant", est.to_json())
    return EXIT_OK


def cmd_verify_lemma1(args) -> int:
    E = read_intervals(args.input)
    try:
        rep = check_lemma1(E, args.p, args.space, _config(args))
    except CertificateViolation as exc:
        _emit(args, "verify-lemma1", {"passed": False, "error": str(exc)})
        return EXIT_FAIL
    _emit(args, "verify-lemma1", rep.to_json() | {"passed": True, "seed": args.seed})
    return EXIT_OK


def cmd_check_transfer(args) -> int:
    E = read_intervals(args.input)
    try:
        rep = check_transfer(E, args.depth, args.delta, args.p, args.space, _config(args), root=args.root)
    except CertificateViolation as exc:
        _emit(args, "check-transfer", {"passed": False, "error": str(exc)})
        return EXIT_FAIL
    _emit(args, "check-transfer", rep.to_json() | {"passed": True, "seed": args.seed})
    return EXIT_OK


def cmd_corpus(args) -> int:
    from .acceptance import corpus_specs
    from .harness import run_corpus

    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    specs = corpus_specs(args.seed, args.count)
    report = run_corpus(specs, checks, args.seed, p_values=args.p_values, space=args.space, config=_config(args))
    if args.out:
        print(str(report.write(args.out)))
    elif args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        sys.stdout.write(dumps(report.to_json()))
    return EXIT_OK if report.passed else EXIT_FAIL


def reproduce(seed: int, out_dir: str | Path, timestamp: str | None = None, echo=print) -> bool:
    """Run the acceptance suite and write ``report.json``, ``report.csv`` and ``timings.json``."""
    from .acceptance import run_all

    results = run_all(seed)
    for res in results:
        echo(res.line())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    passed = all(r.passed for r in results)
    report = {
        "version": __version__,
        "seed": seed,
        "criteria": [r.to_json() for r in results],
        "correct": all(r.correct for r in results),
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    (out / "report.json").write_text(dumps(report))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["criterion", "name", "correct"])
    for r in results:
        writer.writerow([r.number, r.name, r.correct])
    (out / "report.csv").write_text(buf.getvalue())
    (out / "timings.json").write_text(dumps(
        {str(r.number): {"runtime": r.runtime, "budget": r.budget, "within_budget": r.within_budget} for r in results}
    ))
    return passed


def cmd_reproduce(args) -> int:
    out = args.out or "haarlab-report"
    ok = reproduce(args.seed, out, echo=lambda line: print(line, file=sys.stderr))
    print(str(Path(out) / "report.json"))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default="-", help="interval file ('level index' per line); '-' reads stdin")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="directory for output files (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    estimator = argparse.ArgumentParser(add_help=False)
    estimator.add_argument("--p", type=float, default=2.0)
    estimator.add_argument("--space", type=_space, default=SpaceDescriptor.scalar(), help="scalar, l1:7, lq:1.5:4, linf:3")
    estimator.add_argument("--restarts", type=int, default=4)
    estimator.add_argument("--max-iter", type=int, default=200)
    estimator.add_argument("--tol", type=float, default=1e-10)

    parser = argparse.ArgumentParser(prog="haarlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"haarlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("carleson", parents=[common], help="exact Carleson constant")
    p.set_defaults(func=cmd_carleson)

    p = sub.add_parser("decompose", parents=[common], help="almost-disjoint decomposition certificate")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("condense", parents=[common], help="densest generation-n root")
    p.add_argument("--depth", type=int, required=True)
    p.set_defaults(func=cmd_condense)

    p = sub.add_parser("gamlen-gaudet", parents=[common], help="build a Gamlen-Gaudet block system")
    p.add_argument("--root", type=_interval, default=None, help="'level,index' (default: condensation witness)")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--delta", type=_fraction, required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_gamlen_gaudet)

    p = sub.add_parser("estimate-constant", parents=[common, estimator], help="lower/upper bounds for the best constant")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify-lemma1", parents=[common, estimator], help="estimated constant vs closed-form bound")
    p.set_defaults(func=cmd_verify_lemma1)

    p = sub.add_parser("check-transfer", parents=[common, estimator], help="transfer of D_n witnesses onto the collection")
    p.add_argument("--root", type=_interval, default=None)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--delta", type=_fraction, required=True)
    p.set_defaults(func=cmd_check_transfer)

    p = sub.add_parser("corpus", parents=[common, estimator], help="run checks over a seeded random-budget corpus")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--checks", default="lemma1", help="comma-separated subset of " + ",".join(CHECKS))
    p.add_argument("--p-values", type=float, nargs="+", default=[1.25, 1.5, 2.0])
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("reproduce", parents=[common], help="run the acceptance suite and write a report")
    p.set_defaults(func=cmd_reproduce, seed=42)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HaarlabError as exc:
        print(f"haarlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"haarlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
