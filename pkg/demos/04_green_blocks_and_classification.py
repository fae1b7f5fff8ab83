"""Green-operator cell blocks and the (E,m) singularity classifier.

Shows the resolvent bound, the spatial decay of blocks at sub-spectral
energies, and how the non-singularity verdict responds to disorder strength:
at strong disorder (v = 10) the low-energy window is spectrally empty at
small volumes and every cube is non-singular; at weak disorder the window
fills and singular cubes appear.
"""

import numpy as np

from alloylab import (
    GreenSolver,
    ModelConfig,
    MultiCube,
    assemble,
    classify_cube,
    green_block_norm,
    sample_field,
    scale_sequence,
)
from alloylab.disorder import InteractionSpec, LatticeBox
from alloylab.resolvent import ResonantEnergyError

# -- block norms obey the resolvent bound and decay with distance -------------

model1 = ModelConfig(N=1, d=1, v=1.0, interaction=InteractionSpec(u0=0.0), p=4.0)
fld = sample_field(5, LatticeBox((-8,), (8,)), 1.0)
op = assemble(MultiCube((0,), 7, 1, 1), fld, model1)
solver = GreenSolver(op)
E = -1.0
dist = solver.dist_to_spectrum(E)
print(f"1d cube L=7, E = {E} (dist to spectrum {dist:.3f}, 1/dist = {1/dist:.3f}):")
for y in range(0, 7, 2):
    blk = green_block_norm(op, E, (0,), (y,), solver=solver)
    print(f"  ||G_(0,{y})|| = {blk.norm:.3e}")

# -- classification across disorder strengths ---------------------------------

scales = scale_sequence(3, 1)
e_grid = np.linspace(0.0, 0.5, 8)
print("\nsingle-cube (E,m)-S rates over 30 samples, m = 0.2, window [0, 0.5]:")
for v in (1.0, 2.0, 10.0):
    model = ModelConfig(N=2, d=1, v=v, h="1/2")
    for k in (0, 1):
        L = scales[k]
        singular = 0
        for i in range(30):
            f = sample_field(1000 * k + i, LatticeBox((-L - 1,), (L + 1,)), v)
            cube_op = assemble(MultiCube((0, 0), L, 2, 1), f, model)
            sol = GreenSolver(cube_op)
            hit = False
            for e in e_grid:
                try:
                    verdict = classify_cube(cube_op, e, model.m, solver=sol)
                except ResonantEnergyError:
                    continue
                if not verdict.non_singular:
                    hit = True
                    break
            singular += hit
        print(f"  v = {v:4.1f}, L = {L}: {singular}/30 singular")

print(
    "\nNote the two competing effects: larger volumes pull the spectrum down"
    "\ninto the window (more singular cubes), while the threshold e^{-mL}"
    "\ntightens; at v = 10 the window holds no spectrum at these volumes and"
    "\nevery cube is non-singular."
)
