"""Lower bounds for the best constant in the upper ℓ^p Haar estimate over a collection.

The best constant is the norm of the synthesis operator
``T: ℓ^p(E; X) -> L^p_X``.  It is estimated from below by a nonlinear power
iteration (Boyd's method): with ``x`` on the unit sphere, take the norming
functional ``g`` of ``Tx``, pull it back to ``z = T* g`` and move ``x`` to
the unit vector normed by ``z``.  Each step satisfies
``‖T x_new‖ >= <g, T x_new> = ‖z‖_* >= <z, x> = ‖T x‖``, so the ratio never
decreases.  Every ratio is a valid lower bound; the matching upper bound is
the closed form from the almost-disjoint decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .carleson import carleson_constant, choose_M, condensation_search, lemma1_upper_bound
from .collection import EmptyCollectionError, IntervalCollection, full_grid
from .dyadic import CertificateViolation, DyadicInterval, HaarlabError
from .gamlen_gaudet import GamlenGaudetSystem, build_system, transfer_coefficients, verify_transfer_inequality
from .synthesis import CoefficientFamily, SpaceDescriptor, rayleigh_ratio, synthesis_matrix


@dataclass(frozen=True)
class EstimateConfig:
    restarts: int = 4
    max_iter: int = 200
    tol: float = 1e-10
    seed: int = 0
    single_starts: int = 4  # how many single-interval starts e_I to iterate from


@dataclass
class ConstantEstimate:
    lower: float
    upper: float
    p: float
    space: SpaceDescriptor
    witness: CoefficientFamily
    iterations: int
    seed: int
    stats: dict = field(default_factory=dict)
    trace: list[float] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "p": self.p,
            "space": str(self.space),
            "witness": self.witness.to_json(),
            "iterations": self.iterations,
            "seed": self.seed,
        }


def _check_p(p: float) -> None:
    if not 1 < p <= 2:
        raise HaarlabError(f"p must lie in (1, 2], got {p}")


class _Operator:
    """Synthesis operator on a fixed interval ordering, with its adjoint."""

    def __init__(self, intervals: Sequence[DyadicInterval], p: float, space: SpaceDescriptor, resolution: int):
        self.intervals = list(intervals)
        self.p = p
        self.space = space
        self.weight = 2.0**-resolution
        self.H = synthesis_matrix(self.intervals, p, resolution)
        self.HT = self.H.T.tocsr()

    def coef_norm(self, x: np.ndarray) -> float:
        return float(np.sum(self.space.norm(x) ** self.p) ** (1 / self.p))

    def image_norm(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        fx = np.asarray(self.H @ x)
        pointwise = self.space.norm(fx)
        return float(np.sum(pointwise**self.p) * self.weight) ** (1 / self.p), fx, pointwise

    def ratio(self, x: np.ndarray) -> float:
        return self.image_norm(x)[0] / self.coef_norm(x)

    def step(self, x: np.ndarray) -> np.ndarray:
        """One ascent step from a unit vector ``x``; returns the next unit vector."""
        p = self.p
        pq = p / (p - 1)
        nrm, fx, pointwise = self.image_norm(x)
        if nrm == 0:
            return x
        g = self.space.norming_functional(fx) * ((pointwise / nrm) ** (p - 1))[:, None]
        z = np.asarray(self.HT @ g) * self.weight
        dn = self.space.dual_norm(z)
        zn = float(np.sum(dn**pq) ** (1 / pq))
        if zn == 0:
            return x
        v = self.space.dual_norming_functional(z)
        return v * ((dn / zn) ** (pq - 1))[:, None]


def power_iteration(op: _Operator, x0: np.ndarray, max_iter: int, tol: float) -> tuple[float, np.ndarray, list[float], int]:
    """Iterate from ``x0``; returns (best ratio, its unit vector, ratio trace, steps)."""
    x = x0 / op.coef_norm(x0)
    ratio = op.ratio(x)
    trace = [ratio]
    best, best_x = ratio, x
    steps = 0
    for steps in range(1, max_iter + 1):
        x = op.step(x)
        new = op.ratio(x)
        trace.append(new)
        if new > best:
            best, best_x = new, x
        if abs(new - ratio) <= tol * max(abs(new), 1e-300):
            break
        ratio = new
    return best, best_x, trace, steps


def structured_starts(n: int, dim: int, single_starts: int) -> list[np.ndarray]:
    """Single-interval vectors, the all-ones family and the ℓ¹-type witness ``x_I = e_{I mod dim}``."""
    starts = []
    for j in range(min(single_starts, n)):
        x = np.zeros((n, dim))
        x[j, 0] = 1.0
        starts.append(x)
    starts.append(np.ones((n, dim)))
    if dim > 1:
        x = np.zeros((n, dim))
        x[np.arange(n), np.arange(n) % dim] = 1.0
        starts.append(x)
    return starts


def estimate_best_constant(
    E: IntervalCollection,
    p: float,
    space: SpaceDescriptor | None = None,
    config: EstimateConfig | None = None,
    starts: Sequence[CoefficientFamily] = (),
) -> ConstantEstimate:
    """Certified lower bound (with witness) and closed-form upper bound for the best constant.

    ``starts`` adds caller-supplied witnesses to the structured and random
    starts; the result is never below the ratio of any start.
    """
    _check_p(p)
    if not E:
        raise EmptyCollectionError("empty collection")
    space = space or SpaceDescriptor.scalar()
    config = config or EstimateConfig()
    intervals = list(E)
    op = _Operator(intervals, p, space, E.max_level + 1)
    n, dim = len(intervals), space.dim

    inits = structured_starts(n, dim, config.single_starts)
    for fam in starts:
        x = fam.matrix(intervals)
        if fam.dim != dim:
            raise HaarlabError(f"start of dimension {fam.dim} for a space of dimension {dim}")
        if np.any(x != 0):
            inits.append(x)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.restarts):
        inits.append(rng.standard_normal((n, dim)))

    best = (-1.0, None, [], 0)
    total = 0
    for x0 in inits:
        ratio, x, trace, steps = power_iteration(op, x0, config.max_iter, config.tol)
        total += steps
        if ratio > best[0]:
            best = (ratio, x, trace, steps)
    ratio, x, trace, _ = best
    witness = CoefficientFamily.from_matrix(intervals, x)
    report = carleson_constant(E)
    return ConstantEstimate(
        lower=ratio,
        upper=lemma1_upper_bound(report.constant, p),
        p=p,
        space=space,
        witness=witness,
        iterations=total,
        seed=config.seed,
        stats={
            "intervals": n,
            "max_level": E.max_level,
            "carleson": str(report.constant),
            "M": choose_M(report.constant),
        },
        trace=trace,
    )


def l1_witness_ratio(n: int, p: float) -> float:
    """Closed form ``Σ_{m≤n} 2^{m/p} / (2^{n+1}-1)^{1/p}`` of the ℓ¹ witness on ``D_n``."""
    if n < 0:
        raise HaarlabError("n must be non-negative")
    _check_p(p)
    return sum(2.0 ** (m / p) for m in range(n + 1)) / float((1 << (n + 1)) - 1) ** (1 / p)


def l1_witness_grid(n: int, p: float) -> float:
    """The same ratio evaluated on the grid with ``x_I = e_I`` in ``ℓ¹`` of dimension ``|D_n|``."""
    E = full_grid(n)
    dim = len(E)
    x = CoefficientFamily({I: np.eye(dim)[j] for j, I in enumerate(E)}, dim)
    return rayleigh_ratio(E, x, p, SpaceDescriptor.lq(1, dim))


@dataclass(frozen=True)
class Lemma1Report:
    lower: float
    upper: float
    p: float
    space: str
    carleson: str
    M: int
    witness: CoefficientFamily

    @property
    def margin(self) -> float:
        return self.upper - self.lower

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "margin": self.margin,
            "p": self.p,
            "space": self.space,
            "carleson": self.carleson,
            "M": self.M,
        }


def check_lemma1(
    E: IntervalCollection,
    p: float,
    space: SpaceDescriptor | None = None,
    config: EstimateConfig | None = None,
    atol: float = 1e-9,
) -> Lemma1Report:
    """Estimate the constant over ``E`` and assert it stays below the closed-form bound."""
    est = estimate_best_constant(E, p, space, config)
    report = Lemma1Report(
        est.lower, est.upper, p, str(est.space), est.stats["carleson"], est.stats["M"], est.witness
    )
    if est.lower > est.upper + atol:
        raise CertificateViolation(f"lower bound {est.lower} exceeds the upper bound {est.upper}", None, "lemma1")
    return report


@dataclass(frozen=True)
class TransferCheck:
    depth: int
    delta: str
    p: float
    space: str
    ratio_haar: float  # witness ratio over D_n
    ratio_transferred: float  # transferred witness ratio over E
    estimate_haar: float
    estimate_collection: float
    factor: float  # (1 - δ)^{1/p}

    def to_json(self) -> dict:
        return dict(self.__dict__)


def check_transfer(
    E: IntervalCollection,
    depth: int,
    delta,
    p: float,
    space: SpaceDescriptor | None = None,
    config: EstimateConfig | None = None,
    root: DyadicInterval | None = None,
    system: GamlenGaudetSystem | None = None,
) -> TransferCheck:
    """Finite-depth comparison of the Haar constant on ``D_n`` with the constant over ``E``.

    The best witness on ``D_n`` is moved onto the blocks of a Gamlen-Gaudet
    system; its ratio over ``E`` must be at least ``(1-δ)^{1/p}`` times its
    ratio over ``D_n``, and the estimate over ``E`` (seeded with it) must
    dominate ``(1-δ)^{1/p}`` times the ``D_n`` estimate.
    """
    _check_p(p)
    space = space or SpaceDescriptor.scalar()
    config = config or EstimateConfig()
    if system is None:
        if root is None:
            root = condensation_search(E, depth).root
        system = build_system(E, root, depth, delta)
    factor = (1 - float(system.delta)) ** (1 / p)

    haar_est = estimate_best_constant(full_grid(depth), p, space, config)
    x = haar_est.witness
    ratio_haar = rayleigh_ratio(full_grid(depth), x, p, space)
    verify_transfer_inequality(system, E, x, p, space)
    y = transfer_coefficients(system, x, p)
    ratio_transferred = rayleigh_ratio(E, y, p, space)
    collection_est = estimate_best_constant(E, p, space, config, starts=[y])

    check = TransferCheck(
        depth,
        str(system.delta),
        p,
        str(space),
        ratio_haar,
        ratio_transferred,
        haar_est.lower,
        collection_est.lower,
        factor,
    )
    if ratio_transferred < factor * ratio_haar - 1e-9:
        raise CertificateViolation(
            f"transferred ratio {ratio_transferred} < (1-δ)^(1/p) * {ratio_haar}", None, "transfer"
        )
    if haar_est.lower > collection_est.lower / factor + 2e-6:
        raise CertificateViolation(
            f"D_n estimate {haar_est.lower} exceeds (1-δ)^(-1/p) * {collection_est.lower}", None, "transfer"
        )
    return check
