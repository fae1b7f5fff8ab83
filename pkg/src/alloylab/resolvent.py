"""Green-operator cell blocks, the (E,m) cube classifier, and the pair survey.

The block G_{v,y} = 1_{C(v)} (H - E)^{-1} 1_{C(y)} is obtained by one sparse
factorization per (operator, E), one multi-column solve collecting every
target cell at once, and a batched SVD over all (v, y) sub-blocks; its norm
is the top singular value, which obeys ||G_{v,y}|| <= 1/dist(E, spec H).

A cube is (E,m)-non-singular when every block from the core lattice ball
B_{[L^{2/3}]}(u) to the outer-layer cells stays below e^{-mL}; otherwise it
is singular.  The survey draws disorder samples, asks whether some energy of
a finite grid makes both cubes of a separable pair singular, and reports the
failure rate against the L^{-2p} target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .disorder import LatticeBox, ModelConfig, sample_field
from .geometry import (
    MultiCube,
    ScaleSequence,
    are_separable,
    cube_regions,
    decay_exponent_floor,
    lattice_ball,
)
from .hamiltonian import FiniteVolumeOperator, assemble, cell_indices

RESONANCE_RTOL = 1e-10
DENSE_SPECTRUM_CUTOFF = 2000


class ResonantEnergyError(RuntimeError):
    """E is too close to the spectrum for a trustworthy resolvent."""

    def __init__(self, energy: float, dist: float, tol: float):
        super().__init__(
            f"energy {energy} is resonant: dist(E, spec) = {dist:.3e} <= {tol:.3e}"
        )
        self.energy = energy
        self.dist = dist
        self.tol = tol


@dataclass(frozen=True)
class GreenBlock:
    source: tuple[int, ...]
    target: tuple[int, ...]
    energy: float
    norm: float


@dataclass(frozen=True)
class CubeVerdict:
    cube: MultiCube
    energy: float
    m: float
    verdict: str  # "NS" | "S"
    witness: GreenBlock  # maximal-norm (v, y) pair
    threshold: float
    n_blocks: int

    @property
    def non_singular(self) -> bool:
        return self.verdict == "NS"


class GreenSolver:
    """Per-operator resolvent workhorse: cached factorizations and a cached
    spectrum-distance oracle for the resonance guard."""

    def __init__(
        self,
        op: FiniteVolumeOperator,
        dense_cutoff: int = DENSE_SPECTRUM_CUTOFF,
        resonance_rtol: float = RESONANCE_RTOL,
    ):
        self.op = op
        self.dense_cutoff = dense_cutoff
        self.resonance_rtol = resonance_rtol
        self._csc = op.matrix.tocsc()
        self._eye = sparse.identity(op.dim, format="csc")
        self._factors: dict[float, spla.SuperLU] = {}
        self._spectrum: Optional[np.ndarray] = None

    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            if self.op.dim > self.dense_cutoff:
                raise ValueError(
                    f"dense spectrum requested for dim {self.op.dim} > {self.dense_cutoff}"
                )
            self._spectrum = np.linalg.eigvalsh(self.op.matrix.toarray())
        return self._spectrum

    def dist_to_spectrum(self, energy: float) -> float:
        if self.op.dim <= self.dense_cutoff:
            return float(np.abs(self.spectrum() - energy).min())
        inv = self.factor(energy)
        linop = spla.LinearOperator(
            shape=(self.op.dim, self.op.dim), matvec=inv.solve, dtype=np.float64
        )
        v0 = np.full(self.op.dim, 1.0 / math.sqrt(self.op.dim))
        mu = spla.eigsh(linop, k=1, which="LM", v0=v0, return_eigenvectors=False)
        return float(1.0 / abs(mu[0]))

    def resonance_tol(self) -> float:
        return self.resonance_rtol * self.op.spectral_bound

    def check_resonance(self, energy: float) -> float:
        dist = self.dist_to_spectrum(energy)
        tol = self.resonance_tol()
        if dist <= tol:
            raise ResonantEnergyError(energy, dist, tol)
        return dist

    def factor(self, energy: float) -> spla.SuperLU:
        key = float(energy)
        if key not in self._factors:
            self._factors[key] = spla.splu(self._csc - key * self._eye)
        return self._factors[key]

    def solve_columns(self, energy: float, cols: np.ndarray) -> np.ndarray:
        rhs = np.zeros((self.op.dim, len(cols)))
        rhs[cols, np.arange(len(cols))] = 1.0
        return self.factor(energy).solve(rhs)


def green_block_norm(
    op: FiniteVolumeOperator,
    energy: float,
    v: Sequence[int],
    y: Sequence[int],
    solver: Optional[GreenSolver] = None,
) -> GreenBlock:
    """Top singular value of 1_{C(v)} (H - E)^{-1} 1_{C(y)}."""
    solver = solver or GreenSolver(op)
    solver.check_resonance(energy)
    rows = cell_indices(op.grid, v)
    cols = cell_indices(op.grid, y)
    z = solver.solve_columns(energy, cols)
    block = z[rows, :]
    norm = float(np.linalg.svd(block, compute_uv=False)[0]) if block.size else 0.0
    return GreenBlock(source=tuple(v), target=tuple(y), energy=energy, norm=norm)


def _classification_cells(cube: MultiCube) -> tuple[list, list]:
    """Core points B_{[L^{2/3}]}(u) and outer-layer lattice cells with
    C(y) inside the cube."""
    core_radius = decay_exponent_floor(cube.radius)
    vs = list(lattice_ball(cube.center, core_radius))
    _, outer = cube_regions(cube)
    ys = [y for y in outer.lattice_points()]
    return vs, ys


def classify_cube(
    op: FiniteVolumeOperator,
    energy: float,
    m: float,
    scales: Optional[ScaleSequence] = None,
    solver: Optional[GreenSolver] = None,
) -> CubeVerdict:
    """(E,m)-NS / (E,m)-S verdict per the block-decay definition.

    All blocks of one classification share a single factorization; the
    witness records the maximal-norm (v, y) pair.  Resonant energies raise
    rather than return a verdict.
    """
    cube = op.grid.cube
    if cube.radius < 2:
        raise ValueError("classification needs cube radius >= 2")
    if scales is not None and cube.radius not in tuple(scales):
        raise ValueError(
            f"cube radius {cube.radius} is not one of the scales {tuple(scales)}"
        )
    solver = solver or GreenSolver(op)
    solver.check_resonance(energy)
    vs, ys = _classification_cells(cube)
    rows_per_v = [cell_indices(op.grid, v) for v in vs]
    cols_per_y = [cell_indices(op.grid, y) for y in ys]
    ncol = len(cols_per_y[0])
    nrow = len(rows_per_v[0])
    z = solver.solve_columns(energy, np.concatenate(cols_per_y))
    z = z.reshape(op.dim, len(ys), ncol)
    blocks = np.empty((len(vs), len(ys), nrow, ncol))
    for iv, rows in enumerate(rows_per_v):
        blocks[iv] = z[rows, :, :].transpose(1, 0, 2)
    norms = np.linalg.svd(blocks.reshape(-1, nrow, ncol), compute_uv=False)[:, 0]
    norms = norms.reshape(len(vs), len(ys))
    iv, iy = np.unravel_index(int(np.argmax(norms)), norms.shape)
    worst = GreenBlock(
        source=tuple(vs[iv]), target=tuple(ys[iy]), energy=energy, norm=float(norms[iv, iy])
    )
    threshold = math.exp(-m * cube.radius)
    verdict = "NS" if worst.norm <= threshold else "S"
    return CubeVerdict(
        cube=cube,
        energy=energy,
        m=m,
        verdict=verdict,
        witness=worst,
        threshold=threshold,
        n_blocks=norms.size,
    )


# ---------------------------------------------------------------------------
# Pair survey
# ---------------------------------------------------------------------------


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval; degenerate (0, 1) when n = 0."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class SampleRecord:
    sample_idx: int
    seed: int
    failure: bool
    e_fail: Optional[float]  # first grid energy with both cubes singular
    verdict_x: str  # "S" if the x-cube was singular at some grid energy
    verdict_y: str  # "S"/"NS" where evaluated, "" when never needed
    resonant: bool = False


@dataclass(frozen=True)
class PairSurveyRow:
    scale_index: int
    scale: int
    pair: tuple[tuple[int, ...], tuple[int, ...]]
    samples: int
    failures: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    bound: float  # L^{-2p}
    resonant_excluded: int
    records: tuple[SampleRecord, ...] = field(repr=False, default=())


def default_survey_pair(
    model: ModelConfig, L: int
) -> tuple[MultiCube, MultiCube]:
    """Canonical separable pair: one cube at the origin, the partner with
    every particle coordinate at (4N+2)L + 1, beyond the sufficient
    separation bound."""
    N, d = model.N, model.d
    x = MultiCube((0,) * (N * d), L, N, d)
    c = (4 * N + 2) * L + 1
    y = MultiCube((c,) * (N * d), L, N, d)
    return x, y


def survey_field_box(
    model: ModelConfig, cubes: Sequence[MultiCube]
) -> LatticeBox:
    """Smallest site box covering every inflated particle projection."""
    d = model.d
    r1 = model.bump.r1
    lo = [min(c.center[i * d + a] - c.radius - r1 for c in cubes for i in range(c.particles)) for a in range(d)]
    hi = [max(c.center[i * d + a] + c.radius + r1 for c in cubes for i in range(c.particles)) for a in range(d)]
    return LatticeBox(tuple(lo), tuple(hi))


def pair_survey(
    model: ModelConfig,
    scales: ScaleSequence,
    k: int,
    e_grid: Sequence[float],
    m: float,
    n_samples: int,
    seed: int,
    pair: Optional[tuple[MultiCube, MultiCube]] = None,
    seed_of_sample=None,
) -> PairSurveyRow:
    """Monte-Carlo estimate of P{some E in the grid makes both cubes S}.

    Each sample draws one field covering both cubes, assembles both
    operators, and scans the energy grid lazily: the partner cube is only
    classified at energies where the first cube is already singular.
    Resonant samples are excluded from the rate and counted separately.
    """
    L = scales[k]
    x_cube, y_cube = pair if pair is not None else default_survey_pair(model, L)
    if not are_separable(x_cube, y_cube, model.bump.r1):
        raise ValueError("survey pair is not separable; choose distant centers")
    box = survey_field_box(model, (x_cube, y_cube))
    e_grid = [float(e) for e in e_grid]
    if seed_of_sample is None:
        seed_of_sample = lambda i: seed + i

    records: list[SampleRecord] = []
    failures = 0
    resonant_excluded = 0
    for i in range(n_samples):
        s_i = seed_of_sample(i)
        fld = sample_field(s_i, box, model.v)
        op_x = assemble(x_cube, fld, model)
        op_y = assemble(y_cube, fld, model)
        sol_x = GreenSolver(op_x)
        sol_y = GreenSolver(op_y)
        failure = False
        e_fail = None
        x_singular = False
        y_verdict = ""
        resonant = False
        try:
            for e in e_grid:
                vx = classify_cube(op_x, e, m, solver=sol_x)
                if vx.non_singular:
                    continue
                x_singular = True
                vy = classify_cube(op_y, e, m, solver=sol_y)
                y_verdict = vy.verdict
                if not vy.non_singular:
                    failure = True
                    e_fail = e
                    break
        except ResonantEnergyError:
            resonant = True
        if resonant:
            resonant_excluded += 1
        elif failure:
            failures += 1
        records.append(
            SampleRecord(
                sample_idx=i,
                seed=s_i,
                failure=failure,
                e_fail=e_fail,
                verdict_x="S" if x_singular else "NS",
                verdict_y=y_verdict,
                resonant=resonant,
            )
        )
    effective = n_samples - resonant_excluded
    rate = failures / effective if effective else 0.0
    lo, hi = wilson_interval(failures, effective)
    return PairSurveyRow(
        scale_index=k,
        scale=L,
        pair=(x_cube.center, y_cube.center),
        samples=effective,
        failures=failures,
        rate=rate,
        wilson_lo=lo,
        wilson_hi=hi,
        bound=float(L) ** (-2.0 * model.p),
        resonant_excluded=resonant_excluded,
        records=tuple(records),
    )
