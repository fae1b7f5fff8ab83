"""Multi-particle cube geometry: scales, layers, separability, annuli.

Everything here is exact integer/rational arithmetic - run it and read the
numbers; nothing is approximated.
"""

from alloylab import (
    MultiCube,
    annulus_index,
    are_separable,
    covering_family,
    cube_regions,
    scale_sequence,
    separability_witness,
)

# -- scale sequence L_k = [L_{k-1}^{3/2}] + 1 --------------------------------

for L0 in (2, 3, 4):
    print(f"L0 = {L0}: scales {list(scale_sequence(L0, 6))}")

# -- interior / outer layer ---------------------------------------------------

cube = MultiCube((0, 0), 9, particles=2, dim=1)
inner, outer = cube_regions(cube)
print(f"\ncube radius 9: interior radius {inner.radius}, "
      f"outer layer spans [{outer.inner_radius}, {outer.radius})")
print(f"outer lattice cells: {sum(1 for _ in outer.lattice_points())}")

# -- separability of two-particle cubes --------------------------------------

L, r1 = 3, 1
x = MultiCube((0, 0), L, 2, 1)
examples = [(0, 100), (0, 2), (100, 100), (0, 31)]
print(f"\nseparability against the cube at (0,0), L={L}, r1={r1}:")
for yc in examples:
    y = MultiCube(yc, L, 2, 1)
    witness = separability_witness(x, y, r1)
    if witness is None:
        print(f"  y = {yc}: not separable")
    else:
        direction, J = witness
        print(f"  y = {yc}: separable ({direction}, J = {J.members()})")

# the sufficient condition |y| > |x| + (4N+2)L from the covering lemma
N = 2
threshold = (4 * N + 2) * L
print(f"\nsufficient separation threshold (4N+2)L = {threshold}:")
for c in (threshold, threshold + 1):
    y = MultiCube((c, c), L, 2, 1)
    print(f"  |y| = {c}: separable = {are_separable(x, y, r1)}")

# -- covering family ----------------------------------------------------------

fam = covering_family((0, 7), L=3, N=2, r1=1)
print(f"\ncovering family for x = (0, 7): {len(fam)} cubes of radius {fam[0].radius}")
for c in fam:
    print(f"  center {c.center}")

# -- annular decomposition of the exterior ------------------------------------

scales = scale_sequence(2, 4)
print(f"\nannuli M_i = Lambda_5N*L_(i+1) \\ Lambda_5N*L_i for N=2, scales {list(scales)}:")
for r in (5, 20, 25, 30, 59, 60, 250):
    i = annulus_index((r, 0, 0, 0), scales, N=2)
    print(f"  |x| = {r}: annulus {i if i is not None else 'core ball'}")
