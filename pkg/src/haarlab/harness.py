"""Collection generators and the corpus runner.

Generators are deterministic functions of their :class:`GeneratorSpec`
(including its seed).  :func:`run_corpus` applies a list of checks to every
generated collection and aggregates the outcome into an
:class:`ExperimentReport` whose JSON form is byte-stable for a fixed input;
wall-clock timings are kept apart from it.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .carleson import almost_disjoint_decomposition, carleson_constant, chain_structure, condensation_search
from .collection import IntervalCollection, full_grid
from .dyadic import CertificateViolation, DyadicInterval, HaarlabError
from .io import dumps, format_intervals
from .synthesis import SpaceDescriptor
from .type_constant import (
    EstimateConfig,
    check_lemma1,
    check_transfer,
    estimate_best_constant,
    l1_witness_grid,
    l1_witness_ratio,
)

KINDS = ("full", "disjoint", "chain", "random-budget", "cascade")


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a collection.

    ``full(n)``, ``disjoint(level, count)``, ``chain(depth)``,
    ``random-budget(max_depth, budget, seed)`` and
    ``cascade(branching, depth, eta, seed)``.
    """

    kind: str
    n: int = 0
    level: int = 0
    count: int = 0
    depth: int = 0
    max_depth: int = 0
    budget: str = "1"
    branching: int = 2
    eta: str = "0"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise HaarlabError(f"unknown generator kind {self.kind!r}")

    @classmethod
    def full(cls, n: int) -> "GeneratorSpec":
        return cls("full", n=n)

    @classmethod
    def disjoint(cls, level: int, count: int) -> "GeneratorSpec":
        return cls("disjoint", level=level, count=count)

    @classmethod
    def chain(cls, depth: int) -> "GeneratorSpec":
        return cls("chain", depth=depth)

    @classmethod
    def random_budget(cls, max_depth: int, budget, seed: int) -> "GeneratorSpec":
        return cls("random-budget", max_depth=max_depth, budget=str(Fraction(budget)), seed=seed)

    @classmethod
    def cascade(cls, branching: int, depth: int, eta=0, seed: int = 0) -> "GeneratorSpec":
        return cls("cascade", branching=branching, depth=depth, eta=str(Fraction(eta)), seed=seed)

    @property
    def label(self) -> str:
        if self.kind == "full":
            return f"full({self.n})"
        if self.kind == "disjoint":
            return f"disjoint({self.level},{self.count})"
        if self.kind == "chain":
            return f"chain({self.depth})"
        if self.kind == "random-budget":
            return f"random-budget({self.max_depth},{self.budget},{self.seed})"
        return f"cascade({self.branching},{self.depth},{self.eta},{self.seed})"

    def to_json(self) -> dict:
        return {"kind": self.kind, **_relevant_fields(self)}

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorSpec":
        return cls(**data)


def _relevant_fields(spec: GeneratorSpec) -> dict:
    names = {
        "full": ("n",),
        "disjoint": ("level", "count"),
        "chain": ("depth",),
        "random-budget": ("max_depth", "budget", "seed"),
        "cascade": ("branching", "depth", "eta", "seed"),
    }[spec.kind]
    return {name: getattr(spec, name) for name in names}


def generate(spec: GeneratorSpec) -> IntervalCollection:
    if spec.kind == "full":
        return full_grid(spec.n)
    if spec.kind == "disjoint":
        if spec.count > 1 << spec.level or spec.count < 1:
            raise HaarlabError(f"cannot pick {spec.count} intervals of level {spec.level}")
        return IntervalCollection(DyadicInterval(spec.level, k) for k in range(spec.count))
    if spec.kind == "chain":
        if spec.depth < 0:
            raise HaarlabError("chain depth must be non-negative")
        return IntervalCollection(DyadicInterval(j, 0) for j in range(spec.depth + 1))
    if spec.kind == "random-budget":
        return _random_budget(spec.max_depth, Fraction(spec.budget), spec.seed)
    return _cascade(spec.branching, spec.depth, Fraction(spec.eta), spec.seed)


def _random_budget(max_depth: int, budget: Fraction, seed: int) -> IntervalCollection:
    """Greedy random subset of ``D_max_depth`` whose Carleson constant stays within ``budget``.

    Node masses are tracked in heap order (node ``2**m + k``) in units of
    ``2**-max_depth``; a candidate is accepted only if every member containing
    it (itself included) keeps ``mass <= budget * measure``.
    """
    if max_depth < 0:
        raise HaarlabError("max_depth must be non-negative")
    if budget < 1:
        raise HaarlabError("a non-empty collection has Carleson constant at least 1")
    rng = np.random.default_rng(seed)
    size = 1 << (max_depth + 1)
    mass = [0] * size
    member = [False] * size
    a, b = budget.numerator, budget.denominator
    keep = rng.uniform(0.3, 1.0)
    order = rng.permutation(np.arange(1, size))
    accept = rng.random(size - 1) < keep
    accept[0] = True  # never empty
    chosen = []
    for node, wanted in zip(order.tolist(), accept.tolist()):
        if not wanted:
            continue
        level = node.bit_length() - 1
        u = 1 << (max_depth - level)
        anc = node
        ok = True
        while anc:
            if (member[anc] or anc == node) and b * (mass[anc] + u) > a * (1 << (max_depth - (anc.bit_length() - 1))):
                ok = False
                break
            anc >>= 1
        if not ok:
            continue
        member[node] = True
        anc = node
        while anc:
            mass[anc] += u
            anc >>= 1
        chosen.append(DyadicInterval(level, node - (1 << level)))
    E = IntervalCollection(chosen)
    if E and carleson_constant(E).constant > budget:
        raise CertificateViolation(f"generated collection exceeds budget {budget}")
    return E


def _cascade(branching: int, depth: int, eta: Fraction, seed: int) -> IntervalCollection:
    """Nested random tilings: every kept interval is split into dyadic pieces
    ``1..branching`` levels finer, and each piece survives with probability ``1 - eta``.
    """
    if branching < 1 or depth < 0:
        raise HaarlabError("cascade needs branching >= 1 and depth >= 0")
    if not 0 <= eta < 1:
        raise HaarlabError("eta must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    root = DyadicInterval(0, 0)
    chosen = [root]
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for K in frontier:
            for piece in _random_tiling(K, branching, rng):
                if rng.random() >= float(eta):
                    nxt.append(piece)
        chosen.extend(nxt)
        frontier = nxt
    return IntervalCollection(chosen)


def _random_tiling(K: DyadicInterval, branching: int, rng) -> list[DyadicInterval]:
    pieces = []
    stack = [K.right_half(), K.left_half()]
    while stack:
        J = stack.pop()
        if J.level - K.level >= branching or rng.random() < 0.5:
            pieces.append(J)
        else:
            stack.extend([J.right_half(), J.left_half()])
    return pieces


# ---------------------------------------------------------------------------
# Corpus runs
# ---------------------------------------------------------------------------

CHECKS = ("lemma1", "decompose", "transfer", "monotonicity", "growth")

CSV_FIELDS = (
    "instance",
    "generator",
    "check",
    "intervals",
    "max_level",
    "carleson",
    "M",
    "p",
    "space",
    "lower",
    "upper",
    "margin",
    "passed",
)


@dataclass
class ExperimentReport:
    seed: int
    specs: list[GeneratorSpec]
    checks: list[str]
    rows: list[dict] = field(default_factory=list)
    criteria: dict[str, bool] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    runtimes: dict[str, float] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and all(self.criteria.values())

    def to_json(self, timestamp: str | None = None) -> dict:
        data = {
            "version": __version__,
            "seed": self.seed,
            "inputs": [spec.to_json() for spec in self.specs],
            "checks": list(self.checks),
            "criteria": dict(self.criteria),
            "results": self.rows,
            "failures": self.failures,
            "passed": self.passed,
        }
        if self.extra:
            data["extra"] = self.extra
        if timestamp is not None:
            data["timestamp"] = timestamp
        return data

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row.get(k, "") for k in CSV_FIELDS})
        return buf.getvalue()

    def write(self, out_dir: str | Path, timestamp: str | None = None) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(self.to_json(timestamp)))
        (out / "report.csv").write_text(self.to_csv())
        (out / "timings.json").write_text(dumps(self.runtimes))
        if self.failures:
            fail_dir = out / "failures"
            fail_dir.mkdir(exist_ok=True)
            for fail in self.failures:
                (fail_dir / f"{fail['instance']}.txt").write_text(fail["intervals_text"])
        return out / "report.json"


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HAARLAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items: Sequence) -> list:
    """Ordered map, run in worker processes when ``HAARLAB_THREADS`` > 1."""
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_instance(job: tuple) -> tuple[list[dict], list[dict], float]:
    idx, spec, checks, p_values, space, config, transfer_depth, transfer_delta = job
    start = time.perf_counter()
    name = f"{idx:04d}"
    E = generate(spec)
    rows, failures = [], []
    if not E:
        return rows, failures, time.perf_counter() - start
    base = {
        "instance": name,
        "generator": spec.label,
        "intervals": len(E),
        "max_level": E.max_level,
    }

    def record_failure(check: str, exc: Exception, **info):
        failures.append(
            {
                "instance": name,
                "generator": spec.to_json(),
                "check": check,
                "error": str(exc),
                "replay": info,
                "intervals_text": format_intervals(E, f"replay: {spec.label} check={check} {info}"),
            }
        )

    carleson = carleson_constant(E).constant
    base["carleson"] = str(carleson)
    for check in checks:
        if check == "decompose":
            try:
                cover = almost_disjoint_decomposition(E)
                for part in cover.parts:
                    chain_structure(part)
                rows.append(base | {"check": check, "M": cover.M, "passed": True})
            except CertificateViolation as exc:
                rows.append(base | {"check": check, "passed": False})
                record_failure(check, exc)
        elif check == "lemma1":
            for p in p_values:
                try:
                    rep = check_lemma1(E, p, space, config)
                    rows.append(
                        base
                        | {
                            "check": check,
                            "M": rep.M,
                            "p": p,
                            "space": str(space),
                            "lower": rep.lower,
                            "upper": rep.upper,
                            "margin": rep.margin,
                            "passed": True,
                        }
                    )
                except CertificateViolation as exc:
                    rows.append(base | {"check": check, "p": p, "passed": False})
                    record_failure(check, exc, p=p)
        elif check == "transfer":
            root = condensation_search(E, transfer_depth).root
            for p in p_values:
                try:
                    rep = check_transfer(E, transfer_depth, transfer_delta, p, space, config, root=root)
                    rows.append(
                        base
                        | {
                            "check": check,
                            "p": p,
                            "space": str(space),
                            "lower": rep.ratio_transferred,
                            "upper": rep.factor * rep.ratio_haar,
                            "passed": True,
                        }
                    )
                except CertificateViolation as exc:
                    rows.append(base | {"check": check, "p": p, "passed": False})
                    record_failure(check, exc, p=p)
                except HaarlabError:  # no condensation at this depth
                    rows.append(base | {"check": check, "p": p, "passed": "skipped"})
        elif check == "monotonicity":
            # drop the finest member; both the Carleson constant and the cross-seeded estimate may only grow with E
            sub = E - [E.intervals[-1]]
            for p in p_values:
                ok = True
                if sub:
                    ok = carleson_constant(sub).constant <= carleson
                    small = estimate_best_constant(sub, p, space, config)
                    big = estimate_best_constant(E, p, space, config, starts=[small.witness])
                    ok = ok and small.lower <= big.lower + 2 * config.tol
                rows.append(base | {"check": check, "p": p, "space": str(space), "passed": bool(ok)})
                if not ok:
                    record_failure(check, CertificateViolation("monotonicity violated"), p=p)
        elif check == "growth":
            n = min(E.max_level, 6)
            for p in p_values:
                values = [l1_witness_ratio(k, p) for k in range(n + 1)]
                grid = [l1_witness_grid(k, p) for k in range(n + 1)]
                ok = all(abs(a - b) <= 1e-9 for a, b in zip(values, grid)) and all(
                    b > a for a, b in zip(values, values[1:])
                )
                rows.append(base | {"check": check, "p": p, "lower": values[-1], "passed": ok})
                if not ok:
                    record_failure(check, CertificateViolation("growth probe failed"), p=p)
        else:
            raise HaarlabError(f"unknown check {check!r}")
    return rows, failures, time.perf_counter() - start


def run_corpus(
    specs: Sequence[GeneratorSpec],
    checks: Sequence[str],
    seed: int,
    p_values: Sequence[float] = (1.25, 1.5, 2.0),
    space: SpaceDescriptor | None = None,
    config: EstimateConfig | None = None,
    transfer_depth: int = 3,
    transfer_delta=Fraction(1, 2),
) -> ExperimentReport:
    """Run the selected checks over every generated collection, in spec order."""
    for check in checks:
        if check not in CHECKS:
            raise HaarlabError(f"unknown check {check!r}; choose from {CHECKS}")
    space = space or SpaceDescriptor.scalar()
    config = config or EstimateConfig(seed=seed)
    report = ExperimentReport(seed, list(specs), list(checks))
    jobs = [
        (i, spec, tuple(checks), tuple(p_values), space, config, transfer_depth, transfer_delta)
        for i, spec in enumerate(specs)
    ]
    start = time.perf_counter()
    for rows, failures, elapsed in parallel_map(_run_instance, jobs):
        report.rows.extend(rows)
        report.failures.extend(failures)
    report.runtimes["total"] = time.perf_counter() - start
    for check in checks:
        report.criteria[check] = all(r["passed"] in (True, "skipped") for r in report.rows if r["check"] == check)
    return report
