"""Alloy-type random field, single-site bump, interaction, and model checks.

The random potential is V(x) = sum_s V_s * phi(x - s) with i.i.d. amplitudes
V_s ~ Uniform[0, v] on the integer lattice.  The uniform law is the simplest
choice that is bounded, charges every neighborhood of zero, and has a
Lipschitz distribution function (Hoelder with a = 1/v, b = 1).

The default bump is the indicator of the half-open unit cell (-1/2, 1/2]^d:
its support closure is the closed max-norm ball of radius 1/2 (diameter 1),
the lattice translates tile R^d, and the resulting potential is constant on
cells with boundary ties resolved to the lexicographically smallest nearest
lattice site.  Potential evaluation is exact rational arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .geometry import GROWTH_ALPHA, Scalar, _as_exact

BUMP_UNIT_CELL = "unit_cell_indicator"
INTERACTION_TWO_BODY_STEP = "two_body_step"
INTERACTION_NONE = "none"


class FieldCoverageError(ValueError):
    """A potential evaluation needed a lattice site outside the field's box."""


# ---------------------------------------------------------------------------
# Lattice boxes and alloy fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeBox:
    """Axis-aligned box of lattice sites, inclusive bounds per axis."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("lo and hi must be nonempty and of equal length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"empty box: lo={self.lo}, hi={self.hi}")
        object.__setattr__(self, "lo", tuple(int(a) for a in self.lo))
        object.__setattr__(self, "hi", tuple(int(b) for b in self.hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    def contains(self, site: Sequence[int]) -> bool:
        return all(a <= int(s) <= b for s, a, b in zip(site, self.lo, self.hi, strict=True))

    def offset(self, site: Sequence[int]) -> tuple[int, ...]:
        if not self.contains(site):
            raise FieldCoverageError(f"site {tuple(site)} outside box {self.lo}..{self.hi}")
        return tuple(int(s) - a for s, a in zip(site, self.lo))


@dataclass(eq=False)
class AlloyField:
    """One realization of the i.i.d. amplitudes V_s on a lattice box."""

    box: LatticeBox
    amplitudes: np.ndarray
    seed: int
    v: float

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if self.amplitudes.shape != self.box.shape:
            raise ValueError(
                f"amplitude array shape {self.amplitudes.shape} != box shape {self.box.shape}"
            )

    def amp(self, site: Sequence[int]) -> float:
        return float(self.amplitudes[self.box.offset(site)])

    def to_json(self) -> str:
        payload = {
            "seed": int(self.seed),
            "v": float(self.v),
            "region": [[a, b] for a, b in zip(self.box.lo, self.box.hi)],
            "amplitudes": self.amplitudes.ravel(order="C").tolist(),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "AlloyField":
        payload = json.loads(text)
        box = LatticeBox(
            tuple(int(ab[0]) for ab in payload["region"]),
            tuple(int(ab[1]) for ab in payload["region"]),
        )
        amps = np.array(payload["amplitudes"], dtype=np.float64).reshape(box.shape, order="C")
        return cls(box=box, amplitudes=amps, seed=int(payload["seed"]), v=float(payload["v"]))


def sample_field(seed: int, box: LatticeBox, v: float) -> AlloyField:
    """Draw V_s ~ Uniform[0, v] i.i.d. over the box; fully determined by seed."""
    if v <= 0:
        raise ValueError(f"amplitude bound v must be positive, got {v}")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    amps = v * rng.random(box.shape)
    return AlloyField(box=box, amplitudes=amps, seed=int(seed), v=float(v))


# ---------------------------------------------------------------------------
# Bump function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpFunction:
    """Single-site profile phi: indicator of the closed max-norm ball of
    radius scale/2 (default scale 1, diameter 1).

    With the default scale the translates cover the line with overlaps only
    on the measure-zero set of half-integer ties, so the alloy sum
    sum_s V_s phi(x - s) equals the value at the nearest site almost
    everywhere; the potential uses the everywhere-defined representative that
    assigns a tie to the lexicographically smallest nearest site.  `r1` is
    the declared support-diameter bound the geometry works with; the
    validator compares it against the actual support.
    """

    kind: str = BUMP_UNIT_CELL
    r1: int = 1
    bound: float = 1.0
    support_scale: int = 1

    def __post_init__(self):
        if self.kind != BUMP_UNIT_CELL:
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.support_scale < 1:
            raise ValueError("support_scale must be >= 1")

    @property
    def support_diameter(self) -> int:
        return self.support_scale

    def value(self, z: Sequence) -> float:
        half = Fraction(self.support_scale, 2)
        inside = all(-half <= _as_exact(zi) <= half for zi in z)
        return self.bound if inside else 0.0


def nearest_site(x: Sequence) -> tuple[int, ...]:
    """Nearest lattice site with half-integer ties resolved downward:
    s_i = ceil(x_i - 1/2), the lexicographically smallest nearest site."""
    return tuple(math.ceil(_as_exact(xi) - Fraction(1, 2)) for xi in x)


def single_potential(x: Sequence, fld: AlloyField, bump: BumpFunction) -> float:
    """The alloy potential sum_s V_s phi(x - s) at a point.

    For the default unit-cell bump this returns the piecewise-constant
    representative V_{nearest site}(x) with boundary ties resolved downward
    (equal to the literal sum away from the measure-zero tie set).  Wider
    supports fall back to the literal sum.
    """
    if len(x) != fld.box.dim:
        raise ValueError(f"point has dim {len(x)}, field has dim {fld.box.dim}")
    if bump.support_scale == 1:
        return bump.bound * fld.amp(nearest_site(x))
    half = Fraction(bump.support_scale, 2)
    axes = []
    for xi in x:
        xi = _as_exact(xi)
        lo = math.ceil(xi - half)
        hi = math.floor(xi + half)
        axes.append(range(lo, hi + 1))
    total = 0.0
    import itertools

    for s in itertools.product(*axes):
        w = bump.value([_as_exact(a) - b for a, b in zip(x, s)])
        if w:
            total += w * fld.amp(s)  # raises FieldCoverageError if off-box
    return total


# ---------------------------------------------------------------------------
# Interaction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionSpec:
    """Two-body step interaction U2(x, y) = u0 * 1{|x - y| <= r0}.

    Finite range r0, nonnegative, bounded by u0 * l(l-1)/2 on l particles.
    `kind="none"` turns the interaction off.
    """

    r0: float = 1.0
    u0: float = 1.0
    kind: str = INTERACTION_TWO_BODY_STEP

    def __post_init__(self):
        if self.kind not in (INTERACTION_TWO_BODY_STEP, INTERACTION_NONE):
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if self.r0 < 0 or self.u0 < 0:
            raise ValueError("r0 and u0 must be nonnegative")

    def pair_value(self, p: Sequence, q: Sequence) -> float:
        if self.kind == INTERACTION_NONE or self.u0 == 0.0:
            return 0.0
        dist = max(abs(_as_exact(a) - _as_exact(b)) for a, b in zip(p, q, strict=True))
        return self.u0 if dist <= _as_exact(self.r0) else 0.0


def split_config(x: Sequence, d: int) -> list[tuple]:
    if len(x) % d:
        raise ValueError(f"configuration length {len(x)} not divisible by d={d}")
    return [tuple(x[i * d : (i + 1) * d]) for i in range(len(x) // d)]


def interaction_energy(x: Sequence, spec: InteractionSpec, d: int) -> float:
    """Total interaction of the configuration: sum over unordered pairs."""
    parts = split_config(x, d)
    total = 0.0
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            total += spec.pair_value(parts[i], parts[j])
    return total


def interaction_between(
    x: Sequence, members: Sequence[int], spec: InteractionSpec, d: int
) -> float:
    """U(x_J | x_Jc) = U(x) - U(x_J) - U(x_Jc); vanishes beyond range r0."""
    parts = split_config(x, d)
    members = set(members)
    total = 0.0
    for i in members:
        for j in range(len(parts)):
            if j not in members:
                total += spec.pair_value(parts[i], parts[j])
    return total


def configuration_gap(x: Sequence, members: Sequence[int], d: int) -> Scalar:
    """rho(x_J, x_Jc): min max-norm distance across the split."""
    parts = split_config(x, d)
    members = set(members)
    others = [j for j in range(len(parts)) if j not in members]
    if not members or not others:
        raise ValueError("split must be nontrivial")
    return min(
        max(abs(_as_exact(a) - _as_exact(b)) for a, b in zip(parts[i], parts[j]))
        for i in members
        for j in others
    )


def total_potential(
    x: Sequence, fld: AlloyField, bump: BumpFunction, spec: InteractionSpec, d: int
) -> float:
    parts = split_config(x, d)
    return sum(single_potential(p, fld, bump) for p in parts) + interaction_energy(
        x, spec, d
    )


# ---------------------------------------------------------------------------
# Model configuration
# ---------------------------------------------------------------------------


def parse_step(h) -> Fraction:
    """Grid step, required to be 1/n for a positive integer n."""
    if isinstance(h, Fraction):
        frac = h
    elif isinstance(h, int):
        frac = Fraction(h)
    elif isinstance(h, str):
        frac = Fraction(h)
    elif isinstance(h, float):
        n = round(1.0 / h) if h > 0 else 0
        if n < 1 or n * h != 1.0:
            raise ValueError(f"step {h!r} is not exactly 1/n; pass a string like '1/3'")
        frac = Fraction(1, n)
    else:
        raise TypeError(f"cannot parse grid step from {type(h).__name__}")
    if frac.numerator != 1 or frac.denominator < 1:
        raise ValueError(f"grid step must be 1/n for integer n >= 1, got {frac}")
    return frac


@dataclass(frozen=True)
class ModelConfig:
    """All model-level parameters of one experiment family."""

    N: int = 2
    d: int = 1
    v: float = 10.0
    interaction: InteractionSpec = field(default_factory=InteractionSpec)
    bump: BumpFunction = field(default_factory=BumpFunction)
    h: Fraction = Fraction(1, 2)
    eta: float = 0.5
    m: float = 0.2
    p: float = 6.0
    q: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "h", parse_step(self.h))
        if self.N < 1 or self.d < 1:
            raise ValueError("N and d must be >= 1")
        if self.v <= 0 or self.eta <= 0 or self.m <= 0 or self.q <= 0:
            raise ValueError("v, eta, m, q must be positive")

    @property
    def grid_n(self) -> int:
        return self.h.denominator

    def exponent_condition(self) -> bool:
        """2p > 3*N*d*alpha + alpha*Q with alpha = 3/2."""
        alpha = float(GROWTH_ALPHA)
        return 2.0 * self.p > 3.0 * self.N * self.d * alpha + alpha * self.q


# ---------------------------------------------------------------------------
# Assumption validators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[CheckResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def check_covering(bump: BumpFunction, d: int, L: int, u: Sequence[int], n: int = 2):
    """Exact check of the covering inequality on the step-1/n grid of
    Lambda_L(u): min over grid points of sum_{s in Lambda_L(u) cap Z^d}
    phi(x - s), which must be >= 1.

    Returns (min_sum, argmin point).  Exact rational arithmetic throughout.
    The natural resolutions are n = 1 and n = 2 (the potential of the default
    bump is constant on half-open cells); finer grids place points within h
    of the open boundary whose nearest site falls outside the restricted sum,
    so the restricted inequality is evaluated where it is meaningful.
    """
    import itertools

    sites = [
        s
        for s in itertools.product(*(range(c - L + 1, c + L) for c in u))
        if max(abs(a - b) for a, b in zip(s, u)) <= L - 1
    ]
    worst = None
    worst_x = None
    grid_1d = [Fraction(k, n) for k in range(-(L * n - 1), L * n)]
    for off in itertools.product(grid_1d, repeat=d):
        x = tuple(c + o for c, o in zip(u, off))
        total = sum(bump.value([a - b for a, b in zip(x, s)]) for s in sites)
        if worst is None or total < worst:
            worst, worst_x = total, x
    return worst, worst_x


def _holder_gap(samples: np.ndarray, eps: float) -> float:
    """sup_y [F_hat(y + eps) - F_hat(y)] for the empirical CDF."""
    s = np.sort(samples)
    n = len(s)
    # windows anchored at sample points cover the sup up to 1/n
    hi = np.searchsorted(s, s + eps, side="right")
    lo = np.arange(n)
    return float((hi - lo).max()) / n


def validate_assumptions(
    config: ModelConfig,
    L0: Optional[int] = None,
    n_draws: int = 100_000,
    seed: int = 7,
) -> AssumptionReport:
    """One pass/fail entry per model assumption; failures are entries, not
    exceptions."""
    checks: list[CheckResult] = []
    rng = np.random.default_rng(seed)
    spec = config.interaction
    bump = config.bump

    # E1: interaction nonnegative, bounded, finite range
    l = config.N
    sup_bound = spec.u0 * l * (l - 1) / 2
    ok = math.isfinite(spec.r0) and spec.r0 >= 0 and 0 <= spec.u0 < math.inf
    samples_ok = True
    for _ in range(200):
        x = tuple((10 * rng.random(l * config.d) - 5).tolist())
        u_val = interaction_energy(x, spec, config.d)
        if not (0 <= u_val <= sup_bound + 1e-12):
            samples_ok = False
            break
    checks.append(
        CheckResult(
            "E1_interaction",
            ok and samples_ok,
            f"range r0={spec.r0}, 0 <= U <= u0*l(l-1)/2 = {sup_bound}",
        )
    )

    # E2: amplitude bounds and mass near zero
    draws = config.v * np.random.default_rng(seed + 1).random(n_draws)
    in_range = bool((draws >= 0).all() and (draws <= config.v).all())
    eps_list = [0.1 * config.v, 0.01 * config.v]
    mass_ok = all(float((draws <= e).mean()) > 0 for e in eps_list)
    checks.append(
        CheckResult(
            "E2_amplitudes",
            in_range and mass_ok,
            f"V in [0, {config.v}]; P(V <= eps) > 0 at eps = {eps_list}",
        )
    )

    # E3: Hoelder continuity of the amplitude law, a = 1/v, b = 1
    holder_ok = True
    details = []
    for eps in (0.1, 0.01):
        gap = _holder_gap(draws, eps)
        slack = 6.0 * math.sqrt(eps / config.v / n_draws) + 2.0 / n_draws
        details.append(f"gap({eps})={gap:.5f} vs {eps / config.v:.5f}+{slack:.5f}")
        holder_ok &= gap <= eps / config.v + slack
    checks.append(CheckResult("E3_holder", holder_ok, "; ".join(details)))

    # E4: bump support within the declared diameter
    checks.append(
        CheckResult(
            "E4_bump_support",
            bump.support_diameter <= bump.r1,
            f"diam(supp phi) = {bump.support_diameter} vs r1 = {bump.r1}",
        )
    )

    # E5: covering condition, exact on the natural grid
    cover_ok = True
    worst_repr = ""
    d_check = min(config.d, 2)
    for L in range(1, 5):
        worst, wx = check_covering(bump, d_check, L, (0,) * d_check, n=2)
        if worst < 1:
            cover_ok = False
            worst_repr = f"L={L}: min sum {worst} at {wx}"
            break
    checks.append(
        CheckResult(
            "E5_covering",
            cover_ok,
            worst_repr or f"exact covering on L in 1..4, d={d_check}, half-integer grid",
        )
    )

    if L0 is not None:
        checks.append(
            CheckResult(
                "L0_geq_r1", L0 >= bump.r1, f"L0 = {L0} vs r1 = {bump.r1}"
            )
        )

    alpha = float(GROWTH_ALPHA)
    rhs = 3 * config.N * config.d * alpha + alpha * config.q
    checks.append(
        CheckResult(
            "exponent_condition",
            config.exponent_condition(),
            f"2p = {2 * config.p} vs 3Nd*alpha + alpha*Q = {rhs}",
        )
    )

    return AssumptionReport(checks=tuple(checks))
