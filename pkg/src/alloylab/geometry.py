"""Combinatorial geometry of multi-particle cubes.

Everything here is exact: cubes live on the integer lattice Z^{l*d} with the
max-norm, scale sequences are computed with integer roots, and separability
tests compare rational interval endpoints. No floating point enters this
module.

Conventions (fixed once, used everywhere):
  * Lambda_L(u) = {x : |x - u| < L} is the OPEN max-norm ball of radius L.
  * B_L(u) is the CLOSED lattice ball, i.e. integer points with |y - u| <= L.
  * Cells C(u) are the open radius-1 cubes Lambda_1(u).
  * Annuli have a closed inner edge and an open outer edge, so consecutive
    annuli partition the exterior exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union

Scalar = Union[int, Fraction]
LatticePoint = tuple[int, ...]

GROWTH_ALPHA = Fraction(3, 2)


def _as_exact(x) -> Scalar:
    """Coerce to int/Fraction without rounding; floats convert exactly."""
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite scalar {x!r}")
        return Fraction(x)
    raise TypeError(f"expected a number, got {type(x).__name__}")


def max_norm(v: Sequence) -> Scalar:
    if len(v) == 0:
        raise ValueError("empty vector has no norm")
    return max(abs(_as_exact(c)) for c in v)


def integer_root(x: int, k: int) -> int:
    """Largest r >= 0 with r**k <= x, exact for arbitrary-size ints."""
    if x < 0 or k < 1:
        raise ValueError("integer_root needs x >= 0, k >= 1")
    if k == 1 or x < 2:
        return x
    if k == 2:
        return math.isqrt(x)
    r = int(round(x ** (1.0 / k)))  # float seed, then exact correction
    while r > 0 and r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def floor_power(base: int, exponent: Fraction) -> int:
    """floor(base**exponent) for rational exponent p/q, exact: root_q(base**p)."""
    if base < 0:
        raise ValueError("base must be nonnegative")
    return integer_root(base ** exponent.numerator, exponent.denominator)


# ---------------------------------------------------------------------------
# Cubes and layers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiCube:
    """Open max-norm cube Lambda_L(center) in R^{particles*dim}."""

    center: LatticePoint
    radius: int
    particles: int
    dim: int

    def __post_init__(self):
        if self.particles < 1 or self.dim < 1:
            raise ValueError("particles and dim must be >= 1")
        if self.radius < 1:
            raise ValueError("cube radius must be a positive integer")
        if len(self.center) != self.particles * self.dim:
            raise ValueError(
                f"center has length {len(self.center)}, expected "
                f"{self.particles}*{self.dim}"
            )
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))

    @property
    def ambient_dim(self) -> int:
        return self.particles * self.dim

    def particle_center(self, i: int) -> LatticePoint:
        """Coordinates of particle i (0-based) of the center point."""
        d = self.dim
        return self.center[i * d : (i + 1) * d]

    def contains_point(self, x: Sequence, inflate: Scalar = 0) -> bool:
        """x in Lambda_{L+inflate}(center), strict inequality."""
        r = self.radius + _as_exact(inflate)
        return all(abs(_as_exact(xi) - c) < r for xi, c in zip(x, self.center, strict=True))

    def lattice_points(self) -> Iterator[LatticePoint]:
        """B_L(center): closed lattice ball of radius L."""
        return lattice_ball(self.center, self.radius)

    @property
    def interior_radius(self) -> int:
        return self.radius // 3

    def interior(self) -> Optional["MultiCube"]:
        """Lambda_{[L/3]}(center), or None when [L/3] = 0 (degenerate)."""
        r = self.interior_radius
        if r < 1:
            return None
        return MultiCube(self.center, r, self.particles, self.dim)


@dataclass(frozen=True)
class OuterLayer:
    """Lambda_L(u) \\ Lambda_{L-2}(u); reported empty (flagged) for L < 2."""

    center: LatticePoint
    radius: int

    @property
    def inner_radius(self) -> int:
        return self.radius - 2

    @property
    def is_empty(self) -> bool:
        return self.radius < 2

    def contains_point(self, x: Sequence) -> bool:
        if self.is_empty:
            return False
        dist = max_norm([_as_exact(xi) - c for xi, c in zip(x, self.center, strict=True)])
        return self.inner_radius <= dist < self.radius

    def contains_lattice(self, y: Sequence[int]) -> bool:
        if self.is_empty:
            return False
        dist = max(abs(int(yi) - c) for yi, c in zip(y, self.center, strict=True))
        return self.inner_radius <= dist <= self.radius - 1

    def lattice_points(self) -> Iterator[LatticePoint]:
        if self.is_empty:
            return iter(())
        return (
            y
            for y in lattice_ball(self.center, self.radius - 1)
            if max(abs(a - b) for a, b in zip(y, self.center)) >= self.inner_radius
        )


def lattice_ball(center: Sequence[int], radius: int) -> Iterator[LatticePoint]:
    """Integer points y with |y - center| <= radius (radius < 0 -> empty)."""
    if radius < 0:
        return iter(())
    ranges = [range(c - radius, c + radius + 1) for c in center]
    return (tuple(p) for p in itertools.product(*ranges))


def cube_regions(cube: MultiCube) -> tuple[Optional[MultiCube], OuterLayer]:
    """Interior sub-cube of radius [L/3] and the width-2 outer layer."""
    return cube.interior(), OuterLayer(cube.center, cube.radius)


# ---------------------------------------------------------------------------
# Scale sequence L_k = [L_{k-1}^{3/2}] + 1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleSequence:
    L0: int
    values: tuple[int, ...]
    alpha: Fraction = GROWTH_ALPHA

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __iter__(self):
        return iter(self.values)


def scale_sequence(L0: int, count: int) -> ScaleSequence:
    """[L_0, ..., L_count] with L_k = floor(L_{k-1}^{3/2}) + 1.

    floor(L^{3/2}) is computed as isqrt(L^3), so there is no float rounding
    at any scale.
    """
    if L0 < 2:
        raise ValueError(f"initial scale must be >= 2, got {L0}")
    if count < 0:
        raise ValueError("count must be >= 0")
    values = [L0]
    for _ in range(count):
        values.append(math.isqrt(values[-1] ** 3) + 1)
    return ScaleSequence(L0=L0, values=tuple(values))


def decay_exponent_floor(L: int, alpha: Fraction = GROWTH_ALPHA) -> int:
    """floor(L^{1/alpha}) by exact integer root; the core-region radius of
    the non-singularity test."""
    inv = 1 / alpha
    return floor_power(L, inv)


# ---------------------------------------------------------------------------
# Particle partitions and separability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionIndex:
    """Nonempty subset J of particle indices {0, ..., n-1} as a bitmask."""

    mask: int
    n: int

    def __post_init__(self):
        if not 1 <= self.mask <= (1 << self.n) - 1:
            raise ValueError(f"mask {self.mask:#b} not a nonempty subset of {self.n} bits")

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def complement_members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if not self.mask >> i & 1)

    @classmethod
    def from_indices(cls, indices: Sequence[int], n: int) -> "PartitionIndex":
        mask = 0
        for i in indices:
            if not 0 <= i < n:
                raise ValueError(f"particle index {i} out of range(0, {n})")
            mask |= 1 << i
        return cls(mask, n)


def all_partitions(n: int) -> Iterator[PartitionIndex]:
    """All 2^n - 1 nonempty subsets, in increasing bitmask order."""
    for mask in range(1, 1 << n):
        yield PartitionIndex(mask, n)


def _check_pair(a: MultiCube, b: MultiCube) -> None:
    if (a.particles, a.dim) != (b.particles, b.dim):
        raise ValueError("cubes must share particle count and dimension")
    if a.radius != b.radius:
        raise ValueError("separability is defined for equal-radius cubes")


def is_J_separable(
    y_cube: MultiCube, x_cube: MultiCube, J: PartitionIndex, r1: Scalar
) -> bool:
    """Is Lambda_L(y) J-separable from Lambda_L(x)?

    True iff the union of the J-projections of the inflated cube around y is
    disjoint from (i) the remaining projections around y and (ii) every
    projection around x.  Two open d-cubes of radius R around a and b are
    disjoint iff |a - b| >= 2R, so the test reduces to exact integer/rational
    comparisons.
    """
    _check_pair(y_cube, x_cube)
    if J.n != y_cube.particles:
        raise ValueError("partition size does not match particle count")
    r1 = _as_exact(r1)
    if r1 < 0:
        raise ValueError("inflation r1 must be nonnegative")
    gap = 2 * (y_cube.radius + r1)
    d = y_cube.dim
    yj = [y_cube.particle_center(i) for i in range(y_cube.particles)]
    xj = [x_cube.particle_center(i) for i in range(x_cube.particles)]

    def apart(p: LatticePoint, q: LatticePoint) -> bool:
        return max(abs(p[a] - q[a]) for a in range(d)) >= gap

    members = J.members()
    others = J.complement_members()
    for j in members:
        for i in others:
            if not apart(yj[j], yj[i]):
                return False
        for i in range(x_cube.particles):
            if not apart(yj[j], xj[i]):
                return False
    return True


def separability_witness(
    a: MultiCube, b: MultiCube, r1: Scalar
) -> Optional[tuple[str, PartitionIndex]]:
    """First witness (direction, J) that makes the pair separable, or None.

    J is scanned in increasing bitmask order; the returned witness is a
    diagnostic only, the yes/no answer does not depend on the order.
    """
    _check_pair(a, b)
    for J in all_partitions(a.particles):
        if is_J_separable(b, a, J, r1):
            return ("b_from_a", J)
        if is_J_separable(a, b, J, r1):
            return ("a_from_b", J)
    return None


def are_separable(a: MultiCube, b: MultiCube, r1: Scalar) -> bool:
    return separability_witness(a, b, r1) is not None


def cube_distance(a: MultiCube, b: MultiCube) -> Scalar:
    """Max-norm distance between the open cubes (0 if they overlap)."""
    gap = max_norm([p - q for p, q in zip(a.center, b.center)]) - (a.radius + b.radius)
    return gap if gap > 0 else 0


def covering_family(
    x: Sequence[int], L: int, N: int, r1: Scalar
) -> list[MultiCube]:
    """Family of at most N^N cubes of radius 2N(L+r1) around clusterings of x.

    For each map f: particles -> particles, a cube is centered at the
    configuration (x_{f(1)}, ..., x_{f(N)}) obtained by collapsing clustered
    coordinates; duplicates are removed.  Any y outside the union whose cube
    Lambda_L(y) is at distance > 2N(L+r1) from Lambda_L(x) forms a separable
    pair with x.  Non-integer radii are rounded up, which only enlarges the
    family and preserves that guarantee.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if N < 1:
        raise ValueError("N must be >= 1")
    if len(x) % N:
        raise ValueError(f"configuration length {len(x)} not divisible by N={N}")
    d = len(x) // N
    r1 = _as_exact(r1)
    radius = 2 * N * (L + r1)
    radius = int(radius) if radius == int(radius) else math.ceil(radius)
    parts = [tuple(x[i * d : (i + 1) * d]) for i in range(N)]
    centers: list[LatticePoint] = []
    seen = set()
    for f in itertools.product(range(N), repeat=N):
        center = tuple(c for j in range(N) for c in parts[f[j]])
        if center not in seen:
            seen.add(center)
            centers.append(center)
    return [MultiCube(c, radius, N, d) for c in centers]


# ---------------------------------------------------------------------------
# Annular decomposition of the exterior
# ---------------------------------------------------------------------------


def annulus_index(
    x: Sequence[int], scales: ScaleSequence, N: int
) -> Optional[int]:
    """Index i of the annulus M_i(0) = Lambda_{5N L_{i+1}} \\ Lambda_{5N L_i}
    containing x, or None inside the innermost ball.

    The inner edge is closed and the outer edge open, so the annuli tile the
    exterior of Lambda_{5N L_0}(0) up to radius 5N L_last.
    """
    if len(scales) < 2:
        raise ValueError("need at least two scales to form an annulus")
    r = max(abs(int(c)) for c in x)
    if r < 5 * N * scales[0]:
        return None
    if r >= 5 * N * scales[len(scales) - 1]:
        raise ValueError(
            f"|x| = {r} beyond the outermost annulus (5N L_max = {5 * N * scales[len(scales) - 1]})"
        )
    for i in range(len(scales) - 1):
        if 5 * N * scales[i] <= r < 5 * N * scales[i + 1]:
            return i
    raise AssertionError("unreachable: annuli partition the bracketed range")
