"""Finite-difference Dirichlet Hamiltonian on a multi-particle cube.

H = -(1/2)Laplacian + U + V discretized with the standard second-order
stencil on the uniform grid of step h = 1/n: interior nodes are the integer
multiples of h strictly inside the cube (2Ln - 1 per axis), boundary nodes
are omitted entirely (Dirichlet), and the matrix is

    (1/(2h^2)) (2*D*I - A) + diag(U + sum_i V(x_i)),   D = particles * dim.

Node coordinates are kept as exact integers in units of h, so potential
sampling (nearest-site lookup with the half-open tie rule) and the
interaction step function involve no floating-point comparisons.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sparse

from .disorder import (
    INTERACTION_NONE,
    INTERACTION_TWO_BODY_STEP,
    AlloyField,
    FieldCoverageError,
    ModelConfig,
    parse_step,
)
from .geometry import MultiCube

DEFAULT_DIM_CAP = 200_000


class DimensionCapError(ValueError):
    """Requested grid exceeds the configured row cap."""


class CellOutsideError(ValueError):
    """A cell C(w) is not contained in the operator's cube."""


def nearest_site_h(coords_h: np.ndarray, n: int) -> np.ndarray:
    """Nearest lattice site of x = c/n with half-integer ties rounded down:
    ceil(x - 1/2) = -((n - 2c) // (2n)), exact in integer arithmetic."""
    return -((n - 2 * coords_h) // (2 * n))


@dataclass(frozen=True)
class Grid:
    """Interior grid of a cube: per-axis offsets in units of h, row-major."""

    cube: MultiCube
    n: int  # h = 1/n

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def h(self) -> Fraction:
        return Fraction(1, self.n)

    @property
    def axes(self) -> int:
        return self.cube.ambient_dim

    @property
    def points_per_axis(self) -> int:
        return 2 * self.cube.radius * self.n - 1

    @property
    def dim(self) -> int:
        return self.points_per_axis ** self.axes

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.axes

    def offsets(self) -> np.ndarray:
        half = self.cube.radius * self.n - 1
        return np.arange(-half, half + 1, dtype=np.int64)

    def axis_coords_h(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis, integers in units of h."""
        return self.cube.center[axis] * self.n + self.offsets()

    def node_coords_h(self) -> np.ndarray:
        """(dim, axes) integer node coordinates in units of h, row-major."""
        mesh = np.meshgrid(*(self.axis_coords_h(a) for a in range(self.axes)), indexing="ij")
        return np.stack([m.ravel(order="C") for m in mesh], axis=1)

    def node_coords(self) -> np.ndarray:
        return self.node_coords_h().astype(np.float64) / self.n

    def max_norm_h(self) -> np.ndarray:
        """Max-norm |x| of every node, in units of h (exact integers)."""
        return np.abs(self.node_coords_h()).max(axis=1)

    def cell_keys(self) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
        """Half-open-cell key of every node.

        Returns (flat keys, per-axis key minima, per-axis key counts); the
        flat key is the row-major index of the integer cell label, suitable
        for bincount accumulation.  Every node lies in exactly one cell.
        """
        axis_keys = [nearest_site_h(self.axis_coords_h(a), self.n) for a in range(self.axes)]
        mins = tuple(int(k.min()) for k in axis_keys)
        counts = tuple(int(k.max() - k.min() + 1) for k in axis_keys)
        mesh = np.meshgrid(*axis_keys, indexing="ij")
        flat = np.zeros(self.dim, dtype=np.int64)
        for a in range(self.axes):
            flat = flat * counts[a] + (mesh[a].ravel(order="C") - mins[a])
        return flat, mins, counts


@dataclass(eq=False)
class FiniteVolumeOperator:
    """Assembled sparse symmetric H on a grid, with provenance metadata."""

    grid: Grid
    matrix: sparse.csr_matrix
    potential: np.ndarray
    field_seed: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def potential_checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.potential).tobytes()).hexdigest()

    @property
    def spectral_bound(self) -> float:
        """Upper bound 2*D/h^2 + max(U + V) on the spectrum; the lower bound
        is 0 (Dirichlet Laplacian and potential are both nonnegative)."""
        n = self.grid.n
        return 2.0 * self.grid.axes * n * n + float(self.potential.max(initial=0.0))


def _kinetic_1d(M: int, n: int) -> sparse.csr_matrix:
    main = np.full(M, float(n * n))
    off = np.full(M - 1, -0.5 * n * n)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr")


def _axis_operator(op1d: sparse.spmatrix, axis: int, axes: int, M: int) -> sparse.spmatrix:
    mats = [sparse.identity(M, format="csr")] * axes
    mats[axis] = op1d
    return reduce(lambda a, b: sparse.kron(a, b, format="csr"), mats)


def _particle_potentials(grid: Grid, field: AlloyField, n: int) -> np.ndarray:
    """V(x_1) + ... + V(x_l) sampled at the nodes via exact nearest-site
    lookup (half-open cells)."""
    cube = grid.cube
    d = cube.dim
    M = grid.points_per_axis
    total = np.zeros(grid.shape)
    for i in range(cube.particles):
        idx = []
        for a in range(d):
            sites = nearest_site_h(grid.axis_coords_h(i * d + a), n)
            lo, hi = field.box.lo[a], field.box.hi[a]
            if sites.min() < lo or sites.max() > hi:
                raise FieldCoverageError(
                    f"particle {i} axis {a} needs sites "
                    f"{sites.min()}..{sites.max()}, field covers {lo}..{hi}"
                )
            idx.append(sites - lo)
        v_part = field.amplitudes[np.ix_(*idx)] if d > 1 else field.amplitudes[idx[0]]
        shape = [1] * cube.ambient_dim
        for a in range(d):
            shape[i * d + a] = M
        total = total + v_part.reshape(shape)
    return total


def _interaction_values(grid: Grid, model: ModelConfig, n: int) -> np.ndarray:
    spec = model.interaction
    cube = grid.cube
    if spec.kind == INTERACTION_NONE or spec.u0 == 0.0 or cube.particles < 2:
        return np.zeros(grid.shape)
    if spec.kind != INTERACTION_TWO_BODY_STEP:
        raise NotImplementedError(f"assembly for interaction kind {spec.kind!r}")
    # |x_i - x_j| <= r0 compared in units of h: integer |c_i - c_j| <= floor(r0*n)
    thresh = math.floor(Fraction(spec.r0) * n)
    d = cube.dim
    M = grid.points_per_axis
    total = np.zeros(grid.shape)
    for i in range(cube.particles):
        for j in range(i + 1, cube.particles):
            within = np.ones(grid.shape, dtype=bool)
            for a in range(d):
                ci = grid.axis_coords_h(i * d + a)
                cj = grid.axis_coords_h(j * d + a)
                shape_i = [1] * cube.ambient_dim
                shape_i[i * d + a] = M
                shape_j = [1] * cube.ambient_dim
                shape_j[j * d + a] = M
                diff = np.abs(ci.reshape(shape_i) - cj.reshape(shape_j))
                within &= diff <= thresh
            total = total + spec.u0 * within
    return total


def assemble(
    cube: MultiCube,
    field: AlloyField,
    model: ModelConfig,
    h=None,
    max_dim: int = DEFAULT_DIM_CAP,
) -> FiniteVolumeOperator:
    """Assemble H_Lambda on the cube from one disorder realization.

    The field must cover every lattice site the potential lookup touches
    (contained in the inflated projections Pi Lambda_{L+r1}); the row count
    is refused beyond `max_dim`.
    """
    if cube.dim != model.d:
        raise ValueError(f"cube dim {cube.dim} != model d {model.d}")
    if cube.particles > model.N:
        raise ValueError(f"cube has {cube.particles} particles > model N {model.N}")
    step = parse_step(h) if h is not None else model.h
    n = step.denominator
    grid = Grid(cube=cube, n=n)
    if grid.dim > max_dim:
        raise DimensionCapError(
            f"grid has {grid.dim} rows, above the cap {max_dim}; "
            "refuse rather than thrash"
        )
    M = grid.points_per_axis
    k1 = _kinetic_1d(M, n)
    h0 = _axis_operator(k1, 0, grid.axes, M)
    for a in range(1, grid.axes):
        h0 = h0 + _axis_operator(k1, a, grid.axes, M)
    pot = _particle_potentials(grid, field, n) + _interaction_values(grid, model, n)
    pot_flat = np.ascontiguousarray(pot.ravel(order="C"), dtype=np.float64)
    matrix = (h0 + sparse.diags(pot_flat)).tocsr()
    matrix.sort_indices()
    return FiniteVolumeOperator(
        grid=grid, matrix=matrix, potential=pot_flat, field_seed=field.seed
    )


# ---------------------------------------------------------------------------
# Cell restrictions
# ---------------------------------------------------------------------------


def _check_cell_inside(grid: Grid, w: Sequence[int]) -> None:
    cube = grid.cube
    if len(w) != cube.ambient_dim:
        raise ValueError(f"cell center has length {len(w)}, expected {cube.ambient_dim}")
    if any(abs(int(wi) - c) > cube.radius - 1 for wi, c in zip(w, cube.center)):
        raise CellOutsideError(f"cell C({tuple(w)}) not contained in the cube")


def cell_indices(grid: Grid, w: Sequence[int]) -> np.ndarray:
    """Rows whose node lies in the open radius-1 cell C(w), ascending."""
    _check_cell_inside(grid, w)
    n = grid.n
    M = grid.points_per_axis
    positions = []
    for a in range(grid.axes):
        c = grid.axis_coords_h(a)
        positions.append(np.where(np.abs(c - int(w[a]) * n) < n)[0])
    idx = positions[0]
    for a in range(1, grid.axes):
        idx = (idx[:, None] * M + positions[a][None, :]).ravel()
    return idx


def restrict_to_cells(op: FiniteVolumeOperator, cells: Sequence[Sequence[int]]) -> np.ndarray:
    """Union of cell index sets, sorted ascending (deterministic)."""
    if not cells:
        return np.empty(0, dtype=np.int64)
    parts = [cell_indices(op.grid, w) for w in cells]
    return np.unique(np.concatenate(parts))


def dense(op: FiniteVolumeOperator) -> np.ndarray:
    return op.matrix.toarray()


def dump_matrix(op: FiniteVolumeOperator, path) -> None:
    """Coordinate-format text dump with a provenance header."""
    cube = op.grid.cube
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(
            f"# N={cube.particles} d={cube.dim} L={cube.radius} "
            f"h=1/{op.grid.n} seed={op.field_seed}\n"
        )
        for i, j, val in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {format(val, '.17g')}\n")
