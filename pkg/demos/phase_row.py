"""One row of the (H, L) phase diagram for constant fitness.

Rectangles of height H = 0.5 die out when too narrow (too little mass) and
also when too wide (the total mass drags the growth rate below the Allee
threshold everywhere).  In between they persist.  We scan the row, read off
the pattern and refine both thresholds by bisection.
"""

import numpy as np

from allee_lab.integrator import SimConfig
from allee_lab.model import ConstantFitness, ModelSpec, PolynomialBump
from allee_lab.sweep import SweepSpec, run_sweep, threshold_bisect

model = ModelSpec(ConstantFitness(2.0), PolynomialBump(15.0, 0.1))
print(f"classification threshold eps_eff = {model.eps_eff:.5f}")

L = np.linspace(0.2, 30.0, 30)
diagram = run_sweep(SweepSpec(model, [0.5], L, SimConfig(), workers=1))
print("L:   " + " ".join(f"{x:4.1f}" for x in L))
print("row: " + "    ".join(diagram.row_string(0)))
print(f"scenario {diagram.scenarios[0]}")

row = diagram.row_string(0)
for k in range(len(row) - 1):
    if (row[k] == "P") != (row[k + 1] == "P"):
        est = threshold_bisect(model, 0.5, L[k], L[k + 1], 0.1)
        print(f"threshold between L={L[k]:.2f} and {L[k + 1]:.2f}: {est:.3f}")
