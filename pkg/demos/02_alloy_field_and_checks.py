"""The alloy-type random field and the executable model assumptions.

Draws a field, evaluates the piecewise-constant potential and the step
interaction, and runs the assumption validators that gate every pipeline.
"""

import numpy as np

from alloylab import (
    BumpFunction,
    InteractionSpec,
    LatticeBox,
    ModelConfig,
    interaction_energy,
    sample_field,
    single_potential,
    total_potential,
    validate_assumptions,
)

# -- a reproducible field -----------------------------------------------------

box = LatticeBox((-6,), (6,))
fld = sample_field(seed=2024, box=box, v=10.0)
print("amplitudes V_s on sites -6..6 (Uniform[0, 10], seed 2024):")
print(np.array2string(fld.amplitudes, precision=3))

bump = BumpFunction()
xs = [-1.0, -0.6, -0.5, 0.0, 0.49, 0.5, 1.2]
print("\npotential V(x) = sum_s V_s phi(x - s) (constant per cell, ties down):")
for x in xs:
    print(f"  V({x:+.2f}) = {single_potential((x,), fld, bump):.3f}")

# serialization round-trip is bit exact
from alloylab.disorder import AlloyField

clone = AlloyField.from_json(fld.to_json())
print(f"\nJSON round-trip bit-identical: {np.array_equal(clone.amplitudes, fld.amplitudes)}")

# -- interaction --------------------------------------------------------------

spec = InteractionSpec(r0=1.0, u0=5.0)
print("\ntwo-body step interaction, r0 = 1, u0 = 5:")
for config in [(0.0, 0.5), (0.0, 1.0), (0.0, 1.5), (0.0, 0.7, 4.0)]:
    print(f"  U{config} = {interaction_energy(config, spec, d=1)}")

x = (0.0, 0.4)
print(f"\ntotal potential at {x}: "
      f"{total_potential(x, fld, bump, spec, d=1):.3f} "
      f"(= V(x1) + V(x2) + U)")

# -- assumption validators ----------------------------------------------------

print("\nvalidators on the default model (N=2, d=1, v=10):")
report = validate_assumptions(ModelConfig(), L0=3)
for check in report.checks:
    print(f"  [{'PASS' if check.passed else 'FAIL'}] {check.name}: {check.detail}")

print("\nforced failures:")
bad_bump = ModelConfig(bump=BumpFunction(r1=1, support_scale=3))
print(f"  wide bump vs r1=1 -> E4 "
      f"{'FAIL' if not validate_assumptions(bad_bump, n_draws=5000)['E4_bump_support'].passed else 'PASS'}")
small_p = ModelConfig(p=5.0)
print(f"  p = 5 (needs 2p > 10.5) -> exponent condition "
      f"{'FAIL' if not validate_assumptions(small_p, n_draws=5000)['exponent_condition'].passed else 'PASS'}")
