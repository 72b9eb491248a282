"""A-priori envelopes on a run with fitness bounded below.

The peak of any solution stays under the space-independent supersolution
built from its initial sup and mass, and after a time tau under the
heat-kernel bound exp(r_max tau) rho / sqrt(4 pi tau).  Wide data (large
mass) make the supersolution dip, which is what drives the extinction of
large data.
"""

from allee_lab import oracles
from allee_lab.diagnostics import classify, envelope_check
from allee_lab.integrator import SimConfig, simulate
from allee_lab.model import GaussianDipFitness, ModelSpec, PolynomialBump, Rectangle

model = ModelSpec(GaussianDipFitness(2.0, 2.0, 0.08), PolynomialBump(15.0, 0.1))

for H, L in ((0.2, 5.0), (0.2, 30.0), (2.0, 60.0)):
    traj = simulate(model.with_initial(Rectangle(H, L)), SimConfig())
    rep = envelope_check(traj, model)
    rho0 = rep["rho0"]
    line = f"H={H:<4g} L={L:<4g} rho0={rho0:6.2f} -> {classify(traj.final, model.eps_eff).label:<10}"
    line += f" envelopes ok={rep['ok']}"
    if rho0 > model.r_max:
        ts = oracles.tstar(model.r_max, model.K, rho0)
        um = oracles.ubar_min(rep["M"], model.r_max, model.K, rho0)
        line += f", supersolution min {um:.3f} at t={ts:.3f}"
    print(line)
