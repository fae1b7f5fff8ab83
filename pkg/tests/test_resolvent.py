import math

import numpy as np
import pytest

from alloylab.disorder import (
    AlloyField,
    InteractionSpec,
    LatticeBox,
    ModelConfig,
    sample_field,
)
from alloylab.geometry import MultiCube, scale_sequence
from alloylab.hamiltonian import assemble, cell_indices, dense
from alloylab.resolvent import (
    GreenSolver,
    ResonantEnergyError,
    classify_cube,
    default_survey_pair,
    green_block_norm,
    pair_survey,
    survey_field_box,
    wilson_interval,
)


def zero_field(lo, hi):
    box = LatticeBox((lo,), (hi,))
    return AlloyField(box, np.zeros(box.shape), seed=0, v=1.0)


def model_1p(h="1/1", v=1.0):
    return ModelConfig(N=1, d=1, v=v, interaction=InteractionSpec(u0=0.0), h=h, p=4.0)


def dense_block_norm(op, energy, v, y):
    g = np.linalg.inv(dense(op) - energy * np.eye(op.dim))
    rows = cell_indices(op.grid, v)
    cols = cell_indices(op.grid, y)
    return np.linalg.svd(g[np.ix_(rows, cols)], compute_uv=False)[0]


def test_scalar_resolvent():
    # single node: H = [1], E = 0, block norm = 1
    op = assemble(MultiCube((0,), 1, 1, 1), zero_field(-2, 2), model_1p(), h="1/1")
    assert op.dim == 1
    block = green_block_norm(op, 0.0, (0,), (0,))
    assert block.norm == pytest.approx(1.0, abs=1e-14)


def test_energy_below_spectrum_bounds_blocks():
    op = assemble(MultiCube((0,), 4, 1, 1), zero_field(-5, 5), model_1p(), h="1/2")
    solver = GreenSolver(op)
    for v in ((-2,), (0,), (3,)):
        for y in ((-3,), (1,)):
            block = green_block_norm(op, -10.0, v, y, solver=solver)
            assert block.norm <= 0.1 + 1e-12
            assert block.norm == pytest.approx(
                dense_block_norm(op, -10.0, v, y), rel=1e-10
            )


def test_block_norm_decays_with_distance():
    op = assemble(MultiCube((0,), 3, 1, 1), zero_field(-4, 4), model_1p(), h="1/1")
    solver = GreenSolver(op)
    norms = [
        green_block_norm(op, -1.0, (0,), (y,), solver=solver).norm for y in (0, 1, 2)
    ]
    assert norms[0] > norms[1] > norms[2]


def test_resolvent_bound_random_instances():
    rng = np.random.default_rng(2)
    for trial in range(20):
        L = int(rng.integers(2, 5))
        model = ModelConfig(N=2, d=1, v=5.0, h="1/2")
        fld = sample_field(int(rng.integers(1e6)), LatticeBox((-L - 1,), (L + 1,)), 5.0)
        op = assemble(MultiCube((0, 0), L, 2, 1), fld, model)
        solver = GreenSolver(op)
        spec_vals = np.linalg.eigvalsh(dense(op))
        e = float(rng.uniform(-1.0, spec_vals[-1]))
        dist = np.abs(spec_vals - e).min()
        if dist <= solver.resonance_tol():
            continue
        v = (int(rng.integers(-L + 1, L)), int(rng.integers(-L + 1, L)))
        y = (int(rng.integers(-L + 1, L)), int(rng.integers(-L + 1, L)))
        block = green_block_norm(op, e, v, y, solver=solver)
        assert block.norm <= 1.0 / dist + 1e-8


def test_resonant_energy_raises():
    op = assemble(MultiCube((0,), 3, 1, 1), zero_field(-4, 4), model_1p(), h="1/1")
    e0 = float(np.linalg.eigvalsh(dense(op))[0])
    with pytest.raises(ResonantEnergyError) as err:
        green_block_norm(op, e0, (0,), (1,))
    assert err.value.dist <= err.value.tol


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def test_tiny_threshold_forces_singular():
    op = assemble(MultiCube((0,), 3, 1, 1), zero_field(-4, 4), model_1p(), h="1/1")
    verdict = classify_cube(op, -1.0, m=50.0)
    assert verdict.verdict == "S"
    assert verdict.witness.norm > verdict.threshold


def test_far_energy_is_nonsingular():
    # E = -10: all block norms <= 0.1 < e^{-0.9}
    op = assemble(MultiCube((0,), 9, 1, 1), zero_field(-10, 10), model_1p(), h="1/1")
    verdict = classify_cube(op, -10.0, m=0.1)
    assert verdict.verdict == "NS"
    assert verdict.witness.norm <= 0.1 + 1e-12
    assert verdict.threshold == pytest.approx(math.exp(-0.9))


def test_verdict_scans_definition_cells():
    # v over B_{[L^{2/3}]}(u), y over both outer lattice shells
    op = assemble(MultiCube((0,), 9, 1, 1), zero_field(-10, 10), model_1p(), h="1/1")
    verdict = classify_cube(op, -10.0, m=0.1)
    assert verdict.n_blocks == 9 * 4  # |B_4| = 9 core points, 4 outer cells


def test_verdict_monotone_in_m():
    fld = sample_field(11, LatticeBox((-4,), (4,)), 5.0)
    op = assemble(MultiCube((0,), 3, 1, 1), fld, model_1p(v=5.0), h="1/2")
    solver = GreenSolver(op)
    for e in (-0.5, 0.3):
        big = classify_cube(op, e, m=0.4, solver=solver)
        small = classify_cube(op, e, m=0.1, solver=solver)
        if big.non_singular:
            assert small.non_singular


def test_scale_membership_enforced():
    op = assemble(MultiCube((0,), 4, 1, 1), zero_field(-5, 5), model_1p(), h="1/1")
    with pytest.raises(ValueError):
        classify_cube(op, -1.0, m=0.2, scales=scale_sequence(3, 2))  # 4 not in [3,6,15]


def test_classification_rate_reproducible():
    model = ModelConfig(N=2, d=1, v=10.0, h="1/2")
    scales = scale_sequence(3, 1)

    def singular_rate(seed0):
        hits = 0
        for i in range(10):
            fld = sample_field(seed0 + i, LatticeBox((-4,), (4,)), model.v)
            op = assemble(MultiCube((0, 0), 3, 2, 1), fld, model)
            verdict = classify_cube(op, 0.25, model.m, scales=scales)
            hits += not verdict.non_singular
        return hits / 10

    r1 = singular_rate(100)
    r2 = singular_rate(100)
    assert r1 == r2
    assert 0.0 <= r1 <= 1.0


# ---------------------------------------------------------------------------
# pair survey
# ---------------------------------------------------------------------------


def test_wilson_interval_basics():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(5, 10)
    assert 0.2 < lo < 0.5 < hi < 0.8
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == 0.0 and hi0 < 0.05


def test_survey_zero_samples_degenerate():
    model = ModelConfig(N=2, d=1, v=10.0)
    row = pair_survey(model, scale_sequence(3, 1), 0, [0.0, 0.25], model.m, 0, seed=1)
    assert row.failures == 0 and row.samples == 0 and row.rate == 0.0
    assert (row.wilson_lo, row.wilson_hi) == (0.0, 1.0)


def test_survey_below_spectrum_never_fails():
    # E = -10 with threshold e^{-mL} > 1/10: every cube NS
    model = ModelConfig(N=2, d=1, v=10.0, m=0.05)
    row = pair_survey(model, scale_sequence(3, 1), 0, [-10.0], model.m, 5, seed=3)
    assert row.failures == 0
    assert all(r.verdict_x == "NS" for r in row.records)


def test_survey_determinism():
    model = ModelConfig(N=2, d=1, v=10.0)
    scales = scale_sequence(3, 1)
    grid = [0.0, 0.25, 0.5]
    a = pair_survey(model, scales, 0, grid, model.m, 6, seed=9)
    b = pair_survey(model, scales, 0, grid, model.m, 6, seed=9)
    assert a == b


def test_survey_rejects_non_separable_pair():
    model = ModelConfig(N=2, d=1, v=10.0)
    pair = (
        MultiCube((0, 0), 3, 2, 1),
        MultiCube((0, 2), 3, 2, 1),
    )
    with pytest.raises(ValueError):
        pair_survey(model, scale_sequence(3, 1), 0, [0.25], model.m, 1, seed=1, pair=pair)


def test_survey_field_box_covers_both_cubes():
    model = ModelConfig(N=2, d=1, v=10.0)
    x, y = default_survey_pair(model, 3)
    box = survey_field_box(model, (x, y))
    for cube in (x, y):
        for i in range(cube.particles):
            c = cube.particle_center(i)[0]
            assert box.lo[0] <= c - cube.radius - 1
            assert box.hi[0] >= c + cube.radius + 1
