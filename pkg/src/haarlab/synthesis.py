"""Finite-dimensional target spaces and the Haar synthesis operator.

The synthesis operator sends a coefficient family ``(x_I)`` to
``Σ x_I h_I / |I|**(1/p)`` on the dyadic grid.  It is assembled as a sparse
``(2**N, |E|)`` matrix so that vector-valued coefficients are handled by a
single sparse-dense product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .collection import IntervalCollection
from .dyadic import CellSet, DyadicInterval, HaarlabError


@dataclass(frozen=True)
class SpaceDescriptor:
    """Either the scalar field or ``ℓ^q`` of dimension ``dim``."""

    kind: str = "scalar"
    dim: int = 1
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("scalar", "lq"):
            raise HaarlabError(f"unknown space kind {self.kind!r}")
        if self.kind == "scalar" and self.dim != 1:
            raise HaarlabError("the scalar space has dimension 1")
        if self.dim < 1:
            raise HaarlabError("dimension must be positive")
        if not self.q >= 1:
            raise HaarlabError(f"q must be in [1, inf], got {self.q}")

    @classmethod
    def scalar(cls) -> "SpaceDescriptor":
        return cls()

    @classmethod
    def lq(cls, q: float, dim: int) -> "SpaceDescriptor":
        return cls("lq", dim, float(q))

    @classmethod
    def parse(cls, text: str) -> "SpaceDescriptor":
        """``scalar``, ``l1:7``, ``linf:3`` or ``lq:1.5:4`` (q then dimension)."""
        text = text.strip().lower()
        if text == "scalar":
            return cls.scalar()
        parts = text.split(":")
        head = parts[0]
        try:
            if head == "lq" and len(parts) == 3:
                return cls.lq(float(parts[1]), int(parts[2]))
            if head.startswith("l") and len(parts) == 2:
                q = math.inf if head[1:] in ("inf", "oo") else float(head[1:])
                return cls.lq(q, int(parts[1]))
        except ValueError:
            pass
        raise HaarlabError(f"cannot parse space {text!r}")

    def __str__(self) -> str:
        if self.kind == "scalar":
            return "scalar"
        q = "inf" if math.isinf(self.q) else f"{self.q:g}"
        return f"l{q}:{self.dim}"

    @property
    def dual_exponent(self) -> float:
        q = self.q
        if q == 1:
            return math.inf
        if math.isinf(q):
            return 1.0
        return q / (q - 1)

    def norm(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis."""
        v = np.asarray(v, dtype=float)
        if self.kind == "scalar":
            return np.abs(v[..., 0])
        return _lq_norm(v, self.q)

    def dual_norm(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.kind == "scalar":
            return np.abs(v[..., 0])
        return _lq_norm(v, self.dual_exponent)

    def norming_functional(self, v: np.ndarray) -> np.ndarray:
        """Unit dual vectors ``φ`` with ``⟨φ, v⟩ = ‖v‖`` (rows of ``v``).

        At ``q = 1`` and ``q = ∞`` the functional is a subgradient choice:
        zero entries get sign 0 and the maximal entry is the smallest index.
        """
        return _norming(np.asarray(v, dtype=float), 1.0 if self.kind == "scalar" else self.q)

    def dual_norming_functional(self, u: np.ndarray) -> np.ndarray:
        """Unit vectors ``v`` in the space with ``⟨u, v⟩ = ‖u‖_*``."""
        return _norming(np.asarray(u, dtype=float), 1.0 if self.kind == "scalar" else self.dual_exponent)


def _lq_norm(v: np.ndarray, q: float) -> np.ndarray:
    a = np.abs(v)
    if math.isinf(q):
        return a.max(axis=-1)
    if q == 1:
        return a.sum(axis=-1)
    scale = a.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return (scale[..., 0]) * np.sum((a / safe) ** q, axis=-1) ** (1.0 / q)


def _norming(v: np.ndarray, q: float) -> np.ndarray:
    """Rows of the unit-norm dual vectors for ``ℓ^q``."""
    if v.shape[-1] == 1:
        return np.sign(v)
    if q == 1:
        return np.sign(v)
    if math.isinf(q):
        out = np.zeros_like(v)
        idx = np.argmax(np.abs(v), axis=-1)  # first maximal index
        rows = np.arange(v.shape[0])
        out[rows, idx] = np.sign(v[rows, idx])
        return out
    norms = _lq_norm(v, q)
    safe = np.where(norms > 0, norms, 1.0)
    scaled = v / safe[:, None]
    return np.sign(scaled) * np.abs(scaled) ** (q - 1)


class CoefficientFamily:
    """Finitely supported map from dyadic intervals to vectors of a fixed dimension."""

    def __init__(self, entries: Mapping[DyadicInterval, object], dim: int | None = None):
        data = {}
        for I, value in entries.items():
            vec = np.atleast_1d(np.asarray(value, dtype=float)).copy()
            if vec.ndim != 1:
                raise HaarlabError("coefficients must be vectors")
            data[I] = vec
        if dim is None:
            dims = {v.shape[0] for v in data.values()}
            if len(dims) > 1:
                raise HaarlabError(f"inconsistent coefficient dimensions {sorted(dims)}")
            dim = dims.pop() if dims else 1
        for v in data.values():
            if v.shape[0] != dim:
                raise HaarlabError(f"coefficient of dimension {v.shape[0]}, expected {dim}")
            v.flags.writeable = False
        self.dim = dim
        self._entries = dict(sorted(data.items()))

    @classmethod
    def from_matrix(cls, intervals: Iterable[DyadicInterval], matrix: np.ndarray) -> "CoefficientFamily":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        intervals = list(intervals)
        return cls({I: matrix[i] for i, I in enumerate(intervals) if np.any(matrix[i] != 0)}, matrix.shape[1])

    def __getitem__(self, I: DyadicInterval) -> np.ndarray:
        return self._entries.get(I, np.zeros(self.dim))

    def __contains__(self, I) -> bool:
        return I in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return self._entries.items()

    def support(self) -> IntervalCollection:
        return IntervalCollection(I for I, v in self._entries.items() if np.any(v != 0))

    def scale(self, t: float) -> "CoefficientFamily":
        return CoefficientFamily({I: t * v for I, v in self._entries.items()}, self.dim)

    def matrix(self, intervals: Iterable[DyadicInterval]) -> np.ndarray:
        intervals = list(intervals)
        out = np.zeros((len(intervals), self.dim))
        for i, I in enumerate(intervals):
            if I in self._entries:
                out[i] = self._entries[I]
        return out

    def lp_norm(self, p: float, space: SpaceDescriptor) -> float:
        """``(Σ ‖x_I‖**p)**(1/p)``."""
        if not self._entries:
            return 0.0
        norms = space.norm(np.stack(list(self._entries.values())))
        return float(np.sum(norms**p) ** (1.0 / p))

    def to_json(self) -> list:
        return [{"interval": [I.level, I.index], "value": [float(x) for x in v]} for I, v in self._entries.items()]

    @classmethod
    def from_json(cls, data: list) -> "CoefficientFamily":
        return cls({DyadicInterval(*item["interval"]): item["value"] for item in data})

    def __repr__(self) -> str:
        return f"CoefficientFamily(<{len(self)} entries, dim={self.dim}>)"


@dataclass(frozen=True)
class VectorStepFunction:
    """Piecewise-constant ``X``-valued function: one row of ``values`` per grid cell."""

    resolution: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != 1 << self.resolution:
            raise HaarlabError(f"values of shape {self.values.shape} do not match resolution {self.resolution}")

    def norm(self, p: float, space: SpaceDescriptor, on: CellSet | None = None) -> float:
        """``(∫ ‖f‖**p)**(1/p)``, optionally integrating over the cells of ``on`` only."""
        pointwise = space.norm(self.values)
        if on is not None:
            if on.resolution > self.resolution:
                raise HaarlabError("cell set is finer than the function")
            mask = np.repeat(on.mask, 1 << (self.resolution - on.resolution))
            pointwise = pointwise[mask]
        return float(np.sum(pointwise**p) / (1 << self.resolution)) ** (1.0 / p)

    def refine(self, resolution: int) -> "VectorStepFunction":
        if resolution < self.resolution:
            raise HaarlabError("cannot coarsen")
        return VectorStepFunction(resolution, np.repeat(self.values, 1 << (resolution - self.resolution), axis=0))


def synthesis_matrix(intervals: Iterable[DyadicInterval], p: float, resolution: int) -> sp.csr_matrix:
    """Sparse matrix with column ``j`` equal to ``h_{I_j} / |I_j|**(1/p)`` sampled on the grid."""
    intervals = list(intervals)
    rows, cols, vals = [], [], []
    for j, I in enumerate(intervals):
        if resolution < I.level + 1:
            raise HaarlabError(f"resolution {resolution} too coarse for {I}")
        lo, hi = I.cell_range(resolution)
        mid = (lo + hi) // 2
        amp = 2.0 ** (I.level / p)
        rows.append(np.arange(lo, hi))
        cols.append(np.full(hi - lo, j))
        vals.append(np.concatenate((np.full(mid - lo, amp), np.full(hi - mid, -amp))))
    if not intervals:
        return sp.csr_matrix((1 << resolution, 0))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(1 << resolution, len(intervals)),
    )


def synthesize(
    E: IntervalCollection, x: CoefficientFamily, p: float, resolution: int | None = None
) -> VectorStepFunction:
    """``Σ_I x_I h_I / |I|**(1/p)`` at resolution ``E.max_level + 1`` by default."""
    outside = [I for I, v in x.items() if I not in E and np.any(v != 0)]
    if outside:
        raise HaarlabError(f"coefficient support leaves the collection, e.g. {outside[0]}")
    if resolution is None:
        resolution = E.max_level + 1 if E else 0
    support = [I for I, _ in x.items()]
    H = synthesis_matrix(support, p, resolution)
    X = x.matrix(support)
    return VectorStepFunction(resolution, np.asarray(H @ X).reshape(1 << resolution, x.dim))


def rayleigh_ratio(E: IntervalCollection, x: CoefficientFamily, p: float, space: SpaceDescriptor) -> float:
    """``‖Σ x_I h_I/|I|^(1/p)‖_{L^p_X} / (Σ ‖x_I‖^p)^(1/p)``."""
    denom = x.lp_norm(p, space)
    if denom == 0:
        raise HaarlabError("zero coefficient family")
    return synthesize(E, x, p).norm(p, space) / denom
