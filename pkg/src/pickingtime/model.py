"""Warehouse geometry, pick-time laws and storage profiles.

Every evaluator in the package takes a single :class:`WarehouseConfig`. Item
locations inside a (sub-)aisle are described by a piecewise-linear CDF on
``[0, 1]`` (fraction of the sub-aisle length, measured from the cross-aisle),
which covers random storage, class-based storage and discrete slot atoms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

PROB_SUM_TOL = 1e-12


class ModelError(ValueError):
    """Raised when a model object violates one of its invariants."""


class Layout(enum.Enum):
    SINGLE_BLOCK = "single"
    TWO_BLOCK = "two_block"

    @property
    def blocks(self) -> int:
        return 1 if self is Layout.SINGLE_BLOCK else 2


@dataclass(frozen=True)
class WarehouseGeometry:
    """Parallel-aisle layout with a single cross-aisle.

    ``aisle_length`` is the full aisle length; in a two-block warehouse the
    cross-aisle sits in the middle and each sub-aisle is half as long.
    """

    layout: Layout
    k: int
    aisle_length: float
    aisle_width: float
    speed: float

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool) or self.k < 1:
            raise ModelError(f"number of aisles must be a positive integer, got {self.k!r}")
        if not self.aisle_length > 0:
            raise ModelError(f"aisle length must be > 0, got {self.aisle_length}")
        if not self.aisle_width >= 0:
            raise ModelError(f"aisle width must be >= 0, got {self.aisle_width}")
        if not self.speed > 0:
            raise ModelError(f"walking speed must be > 0, got {self.speed}")

    @property
    def n_subaisles(self) -> int:
        return self.k * self.layout.blocks

    @property
    def roundtrip_length(self) -> float:
        """In-aisle round trip to the far end of one (sub-)aisle, in meters."""
        if self.layout is Layout.SINGLE_BLOCK:
            return 2.0 * self.aisle_length
        return self.aisle_length

    @property
    def cross_step(self) -> float:
        """Cross-aisle distance charged to one (sub-)aisle when passing it."""
        if self.layout is Layout.SINGLE_BLOCK:
            return 2.0 * self.aisle_width
        return self.aisle_width


class PickKind(enum.Enum):
    ZERO = "zero"
    DETERMINISTIC = "deterministic"
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"


@dataclass(frozen=True)
class PickTimeModel:
    """Distribution of the time needed to pick one item.

    Use the class methods rather than the constructor.
    """

    kind: PickKind
    duration: float = 0.0
    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind is PickKind.DETERMINISTIC and not self.duration >= 0:
            raise ModelError(f"deterministic pick time must be >= 0, got {self.duration}")
        if self.kind in (PickKind.EXPONENTIAL, PickKind.GAMMA) and not self.rate > 0:
            raise ModelError(f"pick-time rate must be > 0, got {self.rate}")
        if self.kind is PickKind.GAMMA and not self.shape > 0:
            raise ModelError(f"gamma shape must be > 0, got {self.shape}")

    @classmethod
    def zero(cls) -> PickTimeModel:
        return cls(PickKind.ZERO)

    @classmethod
    def deterministic(cls, d: float) -> PickTimeModel:
        return cls(PickKind.DETERMINISTIC, duration=float(d))

    @classmethod
    def exponential(cls, rate: float) -> PickTimeModel:
        return cls(PickKind.EXPONENTIAL, rate=float(rate))

    @classmethod
    def gamma(cls, shape: float, rate: float) -> PickTimeModel:
        return cls(PickKind.GAMMA, shape=float(shape), rate=float(rate))

    @property
    def mean(self) -> float:
        if self.kind is PickKind.ZERO:
            return 0.0
        if self.kind is PickKind.DETERMINISTIC:
            return self.duration
        if self.kind is PickKind.EXPONENTIAL:
            return 1.0 / self.rate
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind is PickKind.ZERO:
            return np.zeros(size)
        if self.kind is PickKind.DETERMINISTIC:
            return np.full(size, self.duration)
        if self.kind is PickKind.EXPONENTIAL:
            return rng.exponential(1.0 / self.rate, size)
        return rng.gamma(self.shape, 1.0 / self.rate, size)


@dataclass(frozen=True)
class OrderModel:
    """Poisson order size with mean ``lam``."""

    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ModelError(f"mean order size must be > 0, got {self.lam}")


@dataclass(frozen=True, eq=False)
class PiecewiseLinearCdf:
    """Nondecreasing piecewise-linear CDF on [0, 1] with optional jumps.

    Breakpoint ``x[n]`` carries the left limit ``left[n]`` and the value
    ``right[n]`` (evaluation is right-continuous). Between consecutive
    breakpoints the CDF is linear from ``right[n]`` to ``left[n + 1]``.
    """

    x: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        left = np.array(self.left, dtype=float)
        right = np.array(self.right, dtype=float)
        if x.ndim != 1 or x.shape != left.shape or x.shape != right.shape or x.size < 2:
            raise ModelError("a CDF needs at least two breakpoints with matching value arrays")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise ModelError("CDF breakpoints must start at x=0 and end at x=1")
        if np.any(np.diff(x) <= 0):
            raise ModelError("CDF breakpoints must be strictly increasing")
        if left[0] != right[0] or right[0] < 0:
            raise ModelError("CDF at x=0 must satisfy F(0-) = F(0) >= 0")
        if right[-1] != 1.0:
            raise ModelError(f"CDF must equal 1 at x=1, got {right[-1]}")
        if np.any(left > right) or np.any(np.diff(left) < 0) or np.any(right[:-1] > left[1:]):
            raise ModelError("CDF must be nondecreasing")
        for arr in (x, left, right):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def uniform(cls) -> PiecewiseLinearCdf:
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0]))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> PiecewiseLinearCdf:
        """Build from ``[[x, F_left, F_right], ...]`` rows."""
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ModelError("CDF points must be rows of [x, F_left, F_right]")
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def to_points(self) -> list[list[float]]:
        return [[float(a), float(b), float(c)] for a, b, c in zip(self.x, self.left, self.right)]

    @property
    def slopes(self) -> np.ndarray:
        return (self.left[1:] - self.right[:-1]) / np.diff(self.x)

    def is_uniform(self) -> bool:
        return (
            self.x.size == 2 and self.left[0] == 0.0 and self.left[1] == 1.0
        )

    def __eq__(self, other):
        if not isinstance(other, PiecewiseLinearCdf):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.left, other.left)
            and np.array_equal(self.right, other.right)
        )

    def __hash__(self):
        return hash((self.x.tobytes(), self.left.tobytes(), self.right.tobytes()))


def cdf_eval(cdf: PiecewiseLinearCdf, x):
    """Right-continuous evaluation of ``cdf`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)) or np.any(np.isnan(xa)):
        raise ModelError("CDF argument outside [0, 1]")
    # segment n covers [x[n], x[n+1])
    seg = np.clip(np.searchsorted(cdf.x, xa, side="right") - 1, 0, cdf.x.size - 2)
    x0 = cdf.x[seg]
    x1 = cdf.x[seg + 1]
    frac = (xa - x0) / (x1 - x0)
    out = cdf.right[seg] + frac * (cdf.left[seg + 1] - cdf.right[seg])
    out = np.where(xa == 1.0, 1.0, out)
    return float(out) if np.ndim(out) == 0 else out


def cdf_inverse(cdf: PiecewiseLinearCdf, u):
    """Generalized inverse ``inf{x : F(x) >= u}`` for ``u`` in [0, 1)."""
    ua = np.asarray(u, dtype=float)
    if np.any((ua < 0) | (ua >= 1)) or np.any(np.isnan(ua)):
        raise ModelError("CDF inverse argument outside [0, 1)")
    x, left, right = cdf.x, cdf.left, cdf.right
    # first breakpoint n with F(x[n]) >= u; the answer lies in (x[n-1], x[n]]
    n = np.searchsorted(right, ua, side="left")
    prev = np.maximum(n - 1, 0)
    lo_val = right[prev]
    hi_val = left[n]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = (ua - lo_val) / (hi_val - lo_val)
        on_segment = x[prev] + frac * (x[n] - x[prev])
    out = np.where(n == 0, 0.0, np.where(hi_val >= ua, on_segment, x[n]))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SubAisle:
    p: float
    cdf: PiecewiseLinearCdf

    @property
    def inert(self) -> bool:
        return self.p == 0.0


@dataclass(frozen=True)
class StorageProfile:
    """Per-sub-aisle item probabilities and location CDFs.

    ``subaisles[i][j]`` is block ``j`` of aisle ``i`` (0-based). Single-block
    profiles have one entry per aisle; two-block profiles list the upper block
    first, then the lower block.
    """

    subaisles: tuple[tuple[SubAisle, ...], ...]

    def __post_init__(self):
        sub = tuple(tuple(row) for row in self.subaisles)
        object.__setattr__(self, "subaisles", sub)
        if not sub or len({len(row) for row in sub}) != 1 or len(sub[0]) not in (1, 2):
            raise ModelError("storage profile needs k aisles with 1 or 2 sub-aisles each")
        ps = [s.p for row in sub for s in row]
        if any(not (p >= 0 and math.isfinite(p)) for p in ps):
            raise ModelError("sub-aisle probabilities must be finite and >= 0")
        total = math.fsum(ps)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ModelError(f"sub-aisle probabilities sum to {total!r}, expected 1")

    @property
    def k(self) -> int:
        return len(self.subaisles)

    @property
    def blocks(self) -> int:
        return len(self.subaisles[0])

    def probabilities(self) -> np.ndarray:
        """Array of shape ``(k, blocks)``."""
        return np.array([[s.p for s in row] for row in self.subaisles])

    def aisle_probabilities(self) -> np.ndarray:
        return self.probabilities().sum(axis=1)


@dataclass(frozen=True)
class ClassSpec:
    """Class-based storage layout.

    ``boundaries[r]`` lists the full boundary sequence ``0 = u_0 <= ... <= u_Q = 1``
    for region ``r`` (one region per sub-aisle, in profile order).
    """

    demand: tuple[float, ...]
    boundaries: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        demand = tuple(float(d) for d in self.demand)
        bounds = tuple(tuple(float(u) for u in row) for row in self.boundaries)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "boundaries", bounds)
        q = len(demand)
        if q < 1:
            raise ModelError("class-based storage needs at least one class")
        if any(not (d >= 0) for d in demand) or abs(math.fsum(demand) - 1.0) > PROB_SUM_TOL:
            raise ModelError("class demand fractions must be >= 0 and sum to 1")
        for r, row in enumerate(bounds):
            if len(row) != q + 1 or row[0] != 0.0 or row[-1] != 1.0:
                raise ModelError(f"region {r}: boundaries must run from 0 to 1 with Q+1 entries")
            if any(b < a for a, b in zip(row, row[1:])):
                raise ModelError(f"region {r}: boundaries must be nondecreasing")
        for c, (d, f) in enumerate(zip(demand, self.space())):
            if d > 0 and f <= 0:
                raise ModelError(f"class {c + 1} has demand {d} but no storage space")

    @property
    def n_classes(self) -> int:
        return len(self.demand)

    def space(self) -> list[float]:
        """Total storage width ``f_q`` of each class, summed over regions."""
        return [
            math.fsum(row[c + 1] - row[c] for row in self.boundaries)
            for c in range(self.n_classes)
        ]


@dataclass(frozen=True)
class WarehouseConfig:
    geometry: WarehouseGeometry
    order: OrderModel
    pick_time: PickTimeModel
    storage: StorageProfile

    def __post_init__(self):
        if self.storage.k != self.geometry.k or self.storage.blocks != self.geometry.layout.blocks:
            raise ModelError(
                f"storage profile has {self.storage.k}x{self.storage.blocks} sub-aisles, "
                f"geometry needs {self.geometry.k}x{self.geometry.layout.blocks}"
            )

    @property
    def lam(self) -> float:
        return self.order.lam

    def replace(self, **changes) -> WarehouseConfig:
        return replace(self, **changes)


def build_random_profile(geometry: WarehouseGeometry) -> StorageProfile:
    """Items uniform over all sub-aisles and uniform within each."""
    n = geometry.n_subaisles
    uniform = PiecewiseLinearCdf.uniform()
    row = tuple(SubAisle(1.0 / n, uniform) for _ in range(geometry.layout.blocks))
    return StorageProfile(tuple(row for _ in range(geometry.k)))


def is_random_profile(profile: StorageProfile) -> bool:
    n = profile.k * profile.blocks
    return all(
        s.p == 1.0 / n and s.cdf.is_uniform() for row in profile.subaisles for s in row
    )


def _region_cdf(bounds: Sequence[Fraction], weights: Sequence[Fraction]) -> PiecewiseLinearCdf:
    # weights[c]: probability mass of class c inside this region, normalized
    xs = [bounds[0]]
    vals = [Fraction(0)]
    for c, w in enumerate(weights):
        if bounds[c + 1] == bounds[c]:
            continue
        xs.append(bounds[c + 1])
        vals.append(vals[-1] + w)
    # drop interior breakpoints that sit on a straight line
    keep_x, keep_v = [xs[0]], [vals[0]]
    for n in range(1, len(xs) - 1):
        s_prev = (vals[n] - keep_v[-1]) / (xs[n] - keep_x[-1])
        s_next = (vals[n + 1] - vals[n]) / (xs[n + 1] - xs[n])
        if s_prev != s_next:
            keep_x.append(xs[n])
            keep_v.append(vals[n])
    keep_x.append(xs[-1])
    keep_v.append(vals[-1])
    x = np.array([float(v) for v in keep_x])
    f = np.array([float(v) for v in keep_v])
    f[-1] = 1.0
    return PiecewiseLinearCdf(x, f, f)


def build_class_based_profile(geometry: WarehouseGeometry, spec: ClassSpec) -> StorageProfile:
    """Translate a class layout into per-sub-aisle probabilities and CDFs.

    A class-``q`` item lands in region ``r`` with probability proportional to
    the width its class occupies there, and uniformly inside that range.
    """
    n = geometry.n_subaisles
    if len(spec.boundaries) != n:
        raise ModelError(f"class layout has {len(spec.boundaries)} regions, geometry needs {n}")
    demand = [Fraction(d) for d in spec.demand]
    total = sum(demand)
    demand = [d / total for d in demand]
    bounds = [[Fraction(u) for u in row] for row in spec.boundaries]
    space = [sum(row[c + 1] - row[c] for row in bounds) for c in range(spec.n_classes)]

    subs = []
    for row in bounds:
        mass = [
            demand[c] * (row[c + 1] - row[c]) / space[c] if space[c] > 0 else Fraction(0)
            for c in range(spec.n_classes)
        ]
        p = sum(mass)
        if p == 0:
            subs.append(SubAisle(0.0, PiecewiseLinearCdf.uniform()))
        else:
            subs.append(SubAisle(float(p), _region_cdf(row, [m / p for m in mass])))
    b = geometry.layout.blocks
    return StorageProfile(tuple(tuple(subs[i * b:(i + 1) * b]) for i in range(geometry.k)))


def mirrored_boundaries(per_aisle: Sequence[Sequence[float]]) -> tuple[tuple[float, ...], ...]:
    """Expand per-aisle boundaries to both sub-aisles of a two-block layout.

    Locations are measured from the cross-aisle, so mirroring the lower-block
    areas into the upper block means both sub-aisles share the same boundaries.
    """
    out = []
    for row in per_aisle:
        out.append(tuple(row))
        out.append(tuple(row))
    return tuple(out)
