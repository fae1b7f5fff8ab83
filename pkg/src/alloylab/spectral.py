"""Eigen-decomposition in an energy window and eigenfunction diagnostics.

Eigenfunctions are analyzed through their half-open-cell norms: the cells
(w - 1/2, w + 1/2]^D tile the grid, so the squared cell norms of a normalized
vector sum to one exactly, and localization centers are the argmax cells.
The non-singularity test elsewhere uses the open radius-1 cells of the
resolvent module; both conventions are deliberate and kept separate.

Below `DENSE_CUTOFF` rows the full spectrum is computed densely; above, a
shift-invert Lanczos iteration around the window center grows its subspace
until the window is bracketed on both sides (the operator is nonnegative, so
a window touching zero is complete on the left by construction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .disorder import AlloyField, ModelConfig
from .geometry import MultiCube
from .hamiltonian import FiniteVolumeOperator, Grid, assemble, cell_indices
from .resolvent import GreenSolver, ResonantEnergyError

DENSE_CUTOFF = 2000
CENTER_TIE_TOL = 1e-12
CLUSTER_TOL = 1e-10


class EigensolverError(RuntimeError):
    """Iterative eigensolver failed to converge or bracket the window."""


@lru_cache(maxsize=32)
def _grid_cell_keys(grid: Grid):
    flat, mins, counts = grid.cell_keys()
    return flat, mins, counts


def cell_norm_map(grid: Grid, vector: np.ndarray) -> dict[tuple[int, ...], float]:
    """||1_{C_half(w)} vector|| for every half-open cell with >= 1 node."""
    flat, mins, counts = _grid_cell_keys(grid)
    total = int(np.prod(counts))
    sq = np.bincount(flat, weights=np.abs(np.asarray(vector).ravel()) ** 2, minlength=total)
    out: dict[tuple[int, ...], float] = {}
    for key in np.nonzero(sq)[0]:
        w = []
        rem = int(key)
        for c in reversed(counts):
            rem, pos = divmod(rem, c)
            w.append(pos)
        w = tuple(pos + m for pos, m in zip(reversed(w), mins))
        out[w] = math.sqrt(sq[key])
    return out


@dataclass(eq=False)
class EigenPair:
    """Eigenvalue, normalized eigenvector, derived cell data."""

    energy: float
    vector: np.ndarray
    grid: Grid
    cell_norms: dict[tuple[int, ...], float]
    centers: tuple[tuple[int, ...], ...]
    cluster_id: int = 0

    @classmethod
    def from_vector(
        cls, grid: Grid, energy: float, vector: np.ndarray, cluster_id: int = 0
    ) -> "EigenPair":
        norms = cell_norm_map(grid, vector)
        centers = _ordered_centers(norms)
        return cls(
            energy=float(energy),
            vector=np.asarray(vector, dtype=np.float64),
            grid=grid,
            cell_norms=norms,
            centers=centers,
            cluster_id=cluster_id,
        )

    @property
    def center(self) -> tuple[int, ...]:
        """x_hat_{n,1}: the center of minimal max-norm."""
        return self.centers[0]


def _ordered_centers(norms: dict[tuple[int, ...], float]) -> tuple[tuple[int, ...], ...]:
    peak = max(norms.values())
    ties = [w for w, val in norms.items() if peak - val <= CENTER_TIE_TOL]
    ties.sort(key=lambda w: (max(abs(c) for c in w), w))
    return tuple(ties)


def localization_centers(pair: EigenPair) -> tuple[tuple[int, ...], ...]:
    """Argmax cells of the cell-norm map, minimal-norm center first; ties
    within 1e-12 are all retained.  Invariant under sign/phase flips."""
    return _ordered_centers(pair.cell_norms)


# ---------------------------------------------------------------------------
# Window eigen-decomposition
# ---------------------------------------------------------------------------


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _cluster_ids(vals: np.ndarray) -> list[int]:
    ids = []
    current = 0
    for i, e in enumerate(vals):
        if i and e - vals[i - 1] > CLUSTER_TOL * max(1.0, abs(e)):
            current += 1
        ids.append(current)
    return ids


def _dense_window(op: FiniteVolumeOperator, lo: float, hi: float):
    vals, vecs = np.linalg.eigh(op.matrix.toarray())
    keep = (vals >= lo) & (vals <= hi)
    return vals[keep], vecs[:, keep]


def _shift_invert_window(op: FiniteVolumeOperator, lo: float, hi: float, k0: int = 16):
    """Grow the Lanczos subspace around the window center until eigenvalues
    on both sides of the window are visible (spectrum >= 0 closes the left
    side of windows touching zero)."""
    dim = op.dim
    sigma = 0.5 * (lo + hi)
    mat = (op.matrix - sigma * sparse.identity(dim, format="csr")).tocsc()
    factor = spla.splu(mat)
    opinv = spla.LinearOperator((dim, dim), matvec=factor.solve, dtype=np.float64)
    v0 = np.full(dim, 1.0 / math.sqrt(dim))
    k = min(k0, dim - 2)
    while True:
        try:
            vals, vecs = spla.eigsh(
                op.matrix, k=k, sigma=sigma, which="LM", OPinv=opinv, v0=v0
            )
        except spla.ArpackNoConvergence as exc:  # pragma: no cover - rare
            raise EigensolverError(f"ARPACK did not converge at k={k}: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        left_done = (vals.min() < lo) or (lo <= 0.0)
        right_done = vals.max() > hi
        if left_done and right_done:
            keep = (vals >= lo) & (vals <= hi)
            return vals[keep], vecs[:, keep]
        if k >= dim - 2:
            vals, vecs = np.linalg.eigh(op.matrix.toarray())
            keep = (vals >= lo) & (vals <= hi)
            return vals[keep], vecs[:, keep]
        k = min(2 * k, dim - 2)


def eigenpairs_in_window(
    op: FiniteVolumeOperator,
    window: tuple[float, float],
    dense_cutoff: int = DENSE_CUTOFF,
) -> list[EigenPair]:
    """All eigenpairs with lo <= E <= hi, ascending, deterministic signs."""
    lo, hi = float(window[0]), float(window[1])
    if not lo <= hi:
        raise ValueError(f"empty window [{lo}, {hi}]")
    if op.dim <= dense_cutoff:
        vals, vecs = _dense_window(op, lo, hi)
    else:
        vals, vecs = _shift_invert_window(op, lo, hi)
    vecs = _fix_signs(vecs)
    ids = _cluster_ids(vals)
    return [
        EigenPair.from_vector(op.grid, vals[i], vecs[:, i], cluster_id=ids[i])
        for i in range(len(vals))
    ]


def count_in_window(
    op: FiniteVolumeOperator,
    window: tuple[float, float],
    method: str = "auto",
    dense_cutoff: int = DENSE_CUTOFF,
) -> int:
    """Eigenvalue count oracle: dense below the cutoff, shift-invert above."""
    lo, hi = float(window[0]), float(window[1])
    if method == "auto":
        method = "dense" if op.dim <= dense_cutoff else "shift_invert"
    if method == "dense":
        vals = np.linalg.eigvalsh(op.matrix.toarray())
        return int(((vals >= lo) & (vals <= hi)).sum())
    if method == "shift_invert":
        vals, _ = _shift_invert_window(op, lo, hi)
        return len(vals)
    raise ValueError(f"unknown counting method {method!r}")


# ---------------------------------------------------------------------------
# Decay fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    m_hat: float
    intercept: float
    residual: float
    radii: tuple[int, int]
    n_shells: int


def decay_fit(
    pair: EigenPair, r_min: int = 2, r_max: Optional[int] = None
) -> Optional[DecayFit]:
    """Least-squares decay mass of the cell-norm envelope.

    Fits log(max cell norm at distance r) against r = |w - center| over the
    shells r_min..r_max (default L - 2); returns None when fewer than four
    nonzero shells exist.
    """
    if r_max is None:
        r_max = pair.grid.cube.radius - 2
    center = pair.center
    shell_peak: dict[int, float] = {}
    for w, val in pair.cell_norms.items():
        r = max(abs(a - b) for a, b in zip(w, center))
        if r_min <= r <= r_max and val > 0:
            shell_peak[r] = max(shell_peak.get(r, 0.0), val)
    if len(shell_peak) < 4:
        return None
    radii = np.array(sorted(shell_peak), dtype=np.float64)
    logs = np.log([shell_peak[int(r)] for r in radii])
    slope, intercept = np.polyfit(radii, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * radii + intercept)) ** 2)))
    return DecayFit(
        m_hat=float(-slope),
        intercept=float(intercept),
        residual=resid,
        radii=(int(radii[0]), int(radii[-1])),
        n_shells=len(shell_peak),
    )


# ---------------------------------------------------------------------------
# Eigenfunction decay inequality probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdiReport:
    cell: tuple[int, ...]
    energy: float
    lhs: float
    block_norm: float
    outer_mass: float
    ratio: float
    flag: str = ""


def _outer_layer_rows(grid: Grid) -> np.ndarray:
    """Nodes of the grid lying in the outer layer of its own cube."""
    cube = grid.cube
    n = grid.n
    rel = grid.node_coords_h() - np.array(cube.center, dtype=np.int64) * n
    norms = np.abs(rel).max(axis=1)
    return np.where(norms >= (cube.radius - 2) * n)[0]


def _region_rows(grid: Grid, cube: MultiCube) -> np.ndarray:
    """Rows of `grid` whose node lies in the outer layer of another cube."""
    n = grid.n
    rel = grid.node_coords_h() - np.array(cube.center, dtype=np.int64) * n
    norms = np.abs(rel).max(axis=1)
    return np.where((norms >= (cube.radius - 2) * n) & (norms < cube.radius * n))[0]


def edi_check(
    big_op: FiniteVolumeOperator,
    pair: EigenPair,
    inner_cube: MultiCube,
    w: Sequence[int],
    field: AlloyField,
    model: ModelConfig,
) -> EdiReport:
    """Empirical eigenfunction-decay-inequality ratio.

    Compares ||1_{C(w)} Phi|| against
    ||1_out G_inner(E) 1_{C(w)}|| * ||1_out Phi||, where G_inner is the
    resolvent of the Hamiltonian re-assembled on the inner cube from the same
    field; the ratio is an empirical stand-in for the constant in front.
    """
    if inner_cube.radius <= 7:
        raise ValueError("decay inequality probe needs inner radius L > 7")
    interior = inner_cube.interior()
    if interior is None or any(
        abs(int(wi) - c) > interior.radius - 1 for wi, c in zip(w, interior.center)
    ):
        raise ValueError(f"cell C({tuple(w)}) must sit inside the interior sub-cube")
    inner_op = assemble(inner_cube, field, model, h=Fraction(1, big_op.grid.n))
    lhs_rows = cell_indices(big_op.grid, w)
    lhs = float(np.linalg.norm(pair.vector[lhs_rows]))
    try:
        solver = GreenSolver(inner_op)
        solver.check_resonance(pair.energy)
    except ResonantEnergyError as exc:
        return EdiReport(
            cell=tuple(w),
            energy=pair.energy,
            lhs=lhs,
            block_norm=math.nan,
            outer_mass=math.nan,
            ratio=math.nan,
            flag=f"resonant: {exc.dist:.3e}",
        )
    cols = cell_indices(inner_op.grid, w)
    z = solver.solve_columns(pair.energy, cols)
    block = z[_outer_layer_rows(inner_op.grid), :]
    block_norm = float(np.linalg.svd(block, compute_uv=False)[0])
    outer_mass = float(np.linalg.norm(pair.vector[_region_rows(big_op.grid, inner_cube)]))
    denom = block_norm * outer_mass
    if lhs == 0.0:
        ratio = 0.0
    elif denom == 0.0:
        ratio = math.inf
    else:
        ratio = lhs / denom
    return EdiReport(
        cell=tuple(w),
        energy=pair.energy,
        lhs=lhs,
        block_norm=block_norm,
        outer_mass=outer_mass,
        ratio=ratio,
    )


# ---------------------------------------------------------------------------
# Mass concentration and center counting
# ---------------------------------------------------------------------------


def mass_concentration(pair: EigenPair, radius) -> float:
    """||(1 - 1_{Lambda_R(0)}) Phi||, exact on grid components.

    Lambda_0(0) is empty, so radius 0 returns the full vector norm.
    """
    n = pair.grid.n
    thr = Fraction(radius) * n
    norms_h = pair.grid.max_norm_h()
    outside = norms_h >= math.ceil(thr) if thr != int(thr) else norms_h >= int(thr)
    return float(np.linalg.norm(pair.vector[outside]))


def center_count(pairs: Sequence[EigenPair], radius: int) -> int:
    """Number of eigenfunctions whose minimal center lies in B_radius(0)."""
    return sum(1 for p in pairs if max(abs(c) for c in p.center) <= radius)


def eigen_report_rows(
    pairs: Sequence[EigenPair], tail_radii: Sequence[int] = ()
) -> list[dict]:
    rows = []
    for p in pairs:
        fit = decay_fit(p)
        rows.append(
            {
                "E_n": p.energy,
                "center": list(p.center),
                "n_centers": len(p.centers),
                "m_hat": None if fit is None else fit.m_hat,
                "tail_mass_by_R": {str(r): mass_concentration(p, r) for r in tail_radii},
            }
        )
    return rows
