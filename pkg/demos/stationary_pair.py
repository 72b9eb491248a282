"""The two symmetric stationary states for a triangular Allee sink.

For constant fitness r and a sink supported near zero, stationary profiles
are a cosine cap glued to an exponentially decaying tail.  Matching the mass
to the eigenvalue gives exactly two roots, one below 1 and one above.
"""

from allee_lab import stationary
from allee_lab.discretization import Grid
from allee_lab.model import SmoothedTriangle

r = 2.0
allee = SmoothedTriangle(r, 0.1)
print("admissible:", stationary.admissibility_report(r, allee)["ok"])

lam1, lam2 = stationary.find_stationary_pair(r, allee)
print(f"lambda_1 = {lam1:.10f}\nlambda_2 = {lam2:.10f}")

for lam in (lam1, lam2):
    for n in (801, 1601, 3201):
        prof = stationary.build_profile(lam, r, allee, Grid(-40.0, 40.0, n))
        res = stationary.residual_pde(prof, r, allee)
        print(f"lambda={lam:.4f} n={n:4d} peak={prof.peak:.5f} "
              f"width={2 * prof.theta0:.3f} residual/peak={res['relative_residual']:.2e}")
