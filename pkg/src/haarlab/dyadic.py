"""Dyadic intervals, dyadic rationals and exact piecewise-constant functions.

Intervals are addressed by ``(level, index)`` with a 0-based index, so
``DyadicInterval(m, k)`` is ``[k / 2**m, (k + 1) / 2**m)``.  Texts that number
the intervals of a level from 1 use ``k + 1`` for the same interval.

Step functions and cell sets live on the grid of ``2**N`` cells of
``[0, 1)`` at resolution ``N``.  Arithmetic between objects of different
resolution first refines both to the finer grid, which is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np


class HaarlabError(ValueError):
    """Base class for invalid input to haarlab operations."""


class CertificateViolation(AssertionError):
    """An exact certificate failed; this signals a bug, not bad input."""

    def __init__(self, message: str, interval: "DyadicInterval | None" = None, item: str | None = None):
        super().__init__(message)
        self.interval = interval
        self.item = item


# ---------------------------------------------------------------------------
# Dyadic rationals
# ---------------------------------------------------------------------------


class DyadicRational:
    """Exact number ``numerator / 2**exponent`` in canonical form.

    Canonical form has an odd numerator, except for integers, which have
    exponent 0.
    Instances compare and hash equal to the corresponding ``Fraction``.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int, exponent: int = 0):
        numerator = int(numerator)
        exponent = int(exponent)
        if numerator == 0:
            exponent = 0
        else:
            # strip common powers of two; a negative exponent is folded into the numerator
            tz = (numerator & -numerator).bit_length() - 1
            shift = min(tz, exponent) if exponent > 0 else 0
            numerator >>= shift
            exponent -= shift
            if exponent < 0:
                numerator <<= -exponent
                exponent = 0
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicRational is immutable")

    @classmethod
    def from_value(cls, value) -> "DyadicRational":
        if isinstance(value, DyadicRational):
            return value
        frac = Fraction(value)
        den = frac.denominator
        if den & (den - 1):
            raise HaarlabError(f"{value!r} is not a dyadic rational")
        return cls(frac.numerator, den.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> "DyadicRational":
        """Parse ``"a/2^k"``, ``"a/b"`` with ``b`` a power of two, or an integer."""
        text = text.strip()
        if "/2^" in text:
            num, exp = text.split("/2^")
            return cls(int(num), int(exp))
        return cls.from_value(Fraction(text))

    @property
    def denominator(self) -> int:
        return 1 << self.exponent

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self) -> float:
        return math.ldexp(self.numerator, -self.exponent) if abs(self.numerator) < 2**1000 else float(self.to_fraction())

    def __repr__(self) -> str:
        return f"DyadicRational({self.numerator}, {self.exponent})"

    def __str__(self) -> str:
        return f"{self.numerator}/2^{self.exponent}"

    def _coerce(self, other) -> "DyadicRational | None":
        if isinstance(other, DyadicRational):
            return other
        if isinstance(other, int):
            return DyadicRational(other)
        if isinstance(other, Rational):
            try:
                return DyadicRational.from_value(other)
            except HaarlabError:
                return None
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() + other if isinstance(other, Rational) else NotImplemented
        e = max(self.exponent, o.exponent)
        return DyadicRational(
            (self.numerator << (e - self.exponent)) + (o.numerator << (e - o.exponent)), e
        )

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.numerator, self.exponent)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() - other if isinstance(other, Rational) else NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.to_fraction() * other if isinstance(other, Rational) else NotImplemented
        return DyadicRational(self.numerator * o.numerator, self.exponent + o.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # quotients of dyadic rationals need not be dyadic
        return self.to_fraction() / Fraction(other.to_fraction() if isinstance(other, DyadicRational) else other)

    def __rtruediv__(self, other):
        return Fraction(other) / self.to_fraction()

    def __abs__(self):
        return DyadicRational(abs(self.numerator), self.exponent)

    def __bool__(self) -> bool:
        return self.numerator != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, DyadicRational):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, Rational):
            return self.to_fraction() == other
        if isinstance(other, float):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def _cmp_pair(self, other):
        """Two comparable values; integers when both sides are dyadic."""
        if isinstance(other, int):
            other = DyadicRational(other)
        if isinstance(other, DyadicRational):
            e = max(self.exponent, other.exponent)
            return self.numerator << (e - self.exponent), other.numerator << (e - other.exponent)
        if isinstance(other, (Rational, float)):
            return self.to_fraction(), other
        return None

    def __lt__(self, other):
        pair = self._cmp_pair(other)
        return NotImplemented if pair is None else pair[0] < pair[1]

    def __le__(self, other):
        pair = self._cmp_pair(other)
        return NotImplemented if pair is None else pair[0] <= pair[1]

    def __gt__(self, other):
        pair = self._cmp_pair(other)
        return NotImplemented if pair is None else pair[0] > pair[1]

    def __ge__(self, other):
        pair = self._cmp_pair(other)
        return NotImplemented if pair is None else pair[0] >= pair[1]


def as_fraction(value) -> Fraction:
    if isinstance(value, DyadicRational):
        return value.to_fraction()
    return Fraction(value)


# ---------------------------------------------------------------------------
# Dyadic intervals
# ---------------------------------------------------------------------------


class Relation(enum.Enum):
    EQUAL = "equal"
    SUBSET = "subset"  # first argument strictly inside the second
    SUPERSET = "superset"  # second argument strictly inside the first
    DISJOINT = "disjoint"


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval ``[index / 2**level, (index + 1) / 2**level)``."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < (1 << self.level):
            raise HaarlabError(f"not a dyadic subinterval of [0,1): level={self.level}, index={self.index}")

    @property
    def measure(self) -> DyadicRational:
        return DyadicRational(1, self.level)

    @property
    def left(self) -> DyadicRational:
        return DyadicRational(self.index, self.level)

    @property
    def right(self) -> DyadicRational:
        return DyadicRational(self.index + 1, self.level)

    def left_half(self) -> "DyadicInterval":
        return DyadicInterval(self.level + 1, 2 * self.index)

    def right_half(self) -> "DyadicInterval":
        return DyadicInterval(self.level + 1, 2 * self.index + 1)

    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise HaarlabError("[0,1) has no parent")
        return DyadicInterval(self.level - 1, self.index >> 1)

    def ancestor(self, level: int) -> "DyadicInterval":
        """The dyadic interval of the given coarser level containing this one."""
        if not 0 <= level <= self.level:
            raise HaarlabError(f"level {level} is not coarser than {self.level}")
        return DyadicInterval(level, self.index >> (self.level - level))

    def contains(self, other: "DyadicInterval") -> bool:
        """Inclusion ``other ⊆ self`` (not strict)."""
        return other.level >= self.level and (other.index >> (other.level - self.level)) == self.index

    def cell_range(self, resolution: int) -> tuple[int, int]:
        """Half-open range of grid cells covered at the given resolution."""
        if resolution < self.level:
            raise HaarlabError(f"resolution {resolution} is coarser than level {self.level}")
        width = 1 << (resolution - self.level)
        return self.index * width, (self.index + 1) * width

    def __str__(self) -> str:
        return f"[{self.left.to_fraction()},{self.right.to_fraction()})"


def interval_relations(first: DyadicInterval, second: DyadicInterval) -> Relation:
    if first == second:
        return Relation.EQUAL
    if second.contains(first):
        return Relation.SUBSET
    if first.contains(second):
        return Relation.SUPERSET
    return Relation.DISJOINT


# ---------------------------------------------------------------------------
# Grid objects
# ---------------------------------------------------------------------------


def _refine_array(values: np.ndarray, from_res: int, to_res: int) -> np.ndarray:
    if to_res < from_res:
        raise HaarlabError(f"cannot coarsen from resolution {from_res} to {to_res}")
    if to_res == from_res:
        return values
    return np.repeat(values, 1 << (to_res - from_res), axis=0)


class CellSet:
    """A union of grid cells at a fixed resolution."""

    __slots__ = ("resolution", "mask")

    def __init__(self, resolution: int, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (1 << resolution,):
            raise HaarlabError(f"mask of shape {mask.shape} does not match resolution {resolution}")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("CellSet is immutable")

    @classmethod
    def empty(cls, resolution: int) -> "CellSet":
        return cls(resolution, np.zeros(1 << resolution, dtype=bool))

    @classmethod
    def from_intervals(cls, intervals: Iterable[DyadicInterval], resolution: int) -> "CellSet":
        mask = np.zeros(1 << resolution, dtype=bool)
        for interval in intervals:
            lo, hi = interval.cell_range(resolution)
            mask[lo:hi] = True
        return cls(resolution, mask)

    @classmethod
    def from_runs(cls, runs: Sequence[Sequence[int]], resolution: int) -> "CellSet":
        mask = np.zeros(1 << resolution, dtype=bool)
        for lo, hi in runs:
            mask[lo:hi] = True
        return cls(resolution, mask)

    def refine(self, resolution: int) -> "CellSet":
        return CellSet(resolution, _refine_array(self.mask, self.resolution, resolution))

    def _common(self, other: "CellSet") -> tuple[np.ndarray, np.ndarray, int]:
        res = max(self.resolution, other.resolution)
        return (
            _refine_array(self.mask, self.resolution, res),
            _refine_array(other.mask, other.resolution, res),
            res,
        )

    def __or__(self, other: "CellSet") -> "CellSet":
        a, b, res = self._common(other)
        return CellSet(res, a | b)

    def __and__(self, other: "CellSet") -> "CellSet":
        a, b, res = self._common(other)
        return CellSet(res, a & b)

    def __sub__(self, other: "CellSet") -> "CellSet":
        a, b, res = self._common(other)
        return CellSet(res, a & ~b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        a, b, _ = self._common(other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    def issubset(self, other: "CellSet") -> bool:
        a, b, _ = self._common(other)
        return not np.any(a & ~b)

    def isdisjoint(self, other: "CellSet") -> bool:
        a, b, _ = self._common(other)
        return not np.any(a & b)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def measure(self) -> DyadicRational:
        return DyadicRational(self.count, self.resolution)

    def runs(self) -> list[list[int]]:
        """Maximal half-open runs ``[start, stop)`` of member cells."""
        padded = np.concatenate(([False], self.mask, [False])).astype(np.int8)
        edges = np.flatnonzero(np.diff(padded))
        return [[int(edges[i]), int(edges[i + 1])] for i in range(0, len(edges), 2)]

    def __repr__(self) -> str:
        return f"CellSet(resolution={self.resolution}, measure={self.measure})"


class StepFunction:
    """Exact piecewise-constant function on the ``2**resolution`` cell grid.

    Values are stored as an integer array when all values are integers and as
    an object array of ``Fraction`` otherwise; they are never rounded.
    """

    __slots__ = ("resolution", "values")

    def __init__(self, resolution: int, values):
        values = np.asarray(values)
        if values.shape != (1 << resolution,):
            raise HaarlabError(f"expected {1 << resolution} cell values, got shape {values.shape}")
        if values.dtype.kind == "f":
            raise HaarlabError("step function values must be exact (int or Fraction)")
        if values.dtype.kind == "O":
            values = np.array([Fraction(v) for v in values], dtype=object)
            if all(v.denominator == 1 for v in values):
                values = np.array([int(v) for v in values], dtype=np.int64)
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "resolution", resolution)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("StepFunction is immutable")

    @classmethod
    def zero(cls, resolution: int) -> "StepFunction":
        return cls(resolution, np.zeros(1 << resolution, dtype=np.int64))

    def refine(self, resolution: int) -> "StepFunction":
        return StepFunction(resolution, _refine_array(self.values, self.resolution, resolution))

    def _common(self, other: "StepFunction"):
        res = max(self.resolution, other.resolution)
        return (
            _refine_array(self.values, self.resolution, res),
            _refine_array(other.values, other.resolution, res),
            res,
        )

    def __add__(self, other: "StepFunction") -> "StepFunction":
        a, b, res = self._common(other)
        return StepFunction(res, _exact_add(a, b))

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + other.scale(-1)

    def __mul__(self, other: "StepFunction") -> "StepFunction":
        a, b, res = self._common(other)
        if a.dtype.kind == "i" and b.dtype.kind == "i":
            return StepFunction(res, a * b)
        return StepFunction(res, np.array([Fraction(x) * Fraction(y) for x, y in zip(a, b)], dtype=object))

    def scale(self, factor) -> "StepFunction":
        factor = as_fraction(factor)
        if factor.denominator == 1 and self.values.dtype.kind == "i":
            return StepFunction(self.resolution, self.values * int(factor))
        return StepFunction(self.resolution, np.array([Fraction(v) * factor for v in self.values], dtype=object))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        a, b, _ = self._common(other)
        return all(Fraction(x) == Fraction(y) for x, y in zip(a, b))

    __hash__ = None

    def integral(self) -> Fraction:
        total = sum((Fraction(v) for v in self.values), Fraction(0)) if self.values.dtype.kind == "O" else Fraction(int(self.values.sum()))
        return total / (1 << self.resolution)

    def power_integral(self, k: int) -> Fraction:
        """Exact ``∫ |f|**k`` for a positive integer ``k``."""
        if self.values.dtype.kind == "i":
            total = sum(abs(int(v)) ** k for v in self.values)
        else:
            total = sum(abs(Fraction(v)) ** k for v in self.values)
        return Fraction(total) / (1 << self.resolution)

    def norm(self, p: float) -> float:
        """L^p norm; only the final root is computed in floating point."""
        if p == math.inf:
            return float(max(abs(Fraction(v)) for v in self.values))
        if float(p).is_integer():
            return float(self.power_integral(int(p))) ** (1.0 / p)
        vals = np.abs(np.array([float(v) for v in self.values]))
        return float(np.sum(vals**p) / (1 << self.resolution)) ** (1.0 / p)

    def level_set(self, value) -> CellSet:
        value = Fraction(value)
        if self.values.dtype.kind == "i":
            mask = self.values == int(value) if value.denominator == 1 else np.zeros(len(self.values), dtype=bool)
        else:
            mask = np.array([Fraction(v) == value for v in self.values], dtype=bool)
        return CellSet(self.resolution, mask)

    def support(self) -> CellSet:
        return CellSet(self.resolution, np.array([v != 0 for v in self.values], dtype=bool))

    def as_float(self) -> np.ndarray:
        return self.values.astype(float)

    def __repr__(self) -> str:
        return f"StepFunction(resolution={self.resolution})"


def _exact_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.dtype.kind == "i" and b.dtype.kind == "i":
        return a + b
    return np.array([Fraction(x) + Fraction(y) for x, y in zip(a, b)], dtype=object)


def haar(interval: DyadicInterval, resolution: int) -> StepFunction:
    """L^∞-normalized Haar function: +1 on the left half, -1 on the right half."""
    if resolution < interval.level + 1:
        raise HaarlabError(
            f"resolution {resolution} cannot represent the halves of a level-{interval.level} interval"
        )
    values = np.zeros(1 << resolution, dtype=np.int64)
    lo, hi = interval.cell_range(resolution)
    mid = (lo + hi) // 2
    values[lo:mid] = 1
    values[mid:hi] = -1
    return StepFunction(resolution, values)
