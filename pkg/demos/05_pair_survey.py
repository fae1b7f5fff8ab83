"""The two-cube Monte-Carlo survey: P{some E makes both separable cubes
singular} against the L^{-2p} target.

Runs a small ensemble at the strong-disorder regime (degenerate: the window
is empty, rates are zero - the probability bound holds trivially there) and
at weak disorder where failures actually occur.  Roughly a minute.
"""

import numpy as np

from alloylab import ModelConfig, pair_survey, scale_sequence

scales = scale_sequence(3, 1)
e_grid = np.linspace(0.0, 0.5, 8).tolist()


def show(tag, model, n_samples=40):
    print(f"\n{tag} (v = {model.v}, m = {model.m}, eta = {model.eta}):")
    for k in (0, 1):
        row = pair_survey(model, scales, k, e_grid, model.m, n_samples, seed=300 + k)
        print(
            f"  k={k} L={row.scale}: failures {row.failures}/{row.samples}"
            f" rate {row.rate:.3f} wilson [{row.wilson_lo:.3f}, {row.wilson_hi:.3f}]"
            f" vs L^-2p = {row.bound:.2e}"
            + (f" ({row.resonant_excluded} resonant excluded)" if row.resonant_excluded else "")
        )


show("strong disorder", ModelConfig(N=2, d=1, v=10.0, h="1/2"))
show("weak disorder", ModelConfig(N=2, d=1, v=1.0, h="1/2"))

print(
    "\nAt strong disorder nothing in [0, 0.5] is ever singular at these"
    "\nvolumes (empty window), so the failure probability is trivially below"
    "\nthe target.  At weak disorder the window fills and the small scales"
    "\nL = 3, 6 are adjacency-dominated (the core ball touches the outer"
    "\nlayer), so failures are common; genuine decay-driven contraction"
    "\nneeds L >= 15 where the block must cross a real gap."
)
