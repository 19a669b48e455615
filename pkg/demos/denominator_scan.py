"""Where can the transfer functions blow up?

Every transfer function of the decay problem shares the denominator P(s).
On the closed right half-plane it must not vanish for the return to
equilibrium to be well behaved. Here we map |P| on a rectangle, list the
sign changes of its real and imaginary parts, and describe the branch
cuts of the square root that enters P.
"""
import numpy as np

from cylwave import PhysParams
from cylwave.decay import branch_cuts, hardy_bound_H, hardy_norm_estimate, DecayModel, scan_P_min

for kappa, nu in [(0.5, 0.0), (0.5, 0.3), (0.1, 0.5), (0.0, 0.2)]:
    p = PhysParams(kappa=kappa, nu=nu)
    geom = branch_cuts(p)
    pts = ", ".join(f"{z.real:+.4f}{z.imag:+.4f}i" for z in geom.branch_points) or "none"
    print(f"kappa={kappa}, nu={nu}: {geom.case_tag:13s} branch points {pts}")

p = PhysParams(kappa=0.5, nu=0.3)
scan = scan_P_min((0.0, 5.0, -20.0, 20.0), 400, p)
print()
print(scan["label"])
print(f"  min |P| = {scan['min_abs']:.4f} at s = {scan['argmin']:.4f}")
cross = scan["zero_crossing_map"]
print(f"  Im P changes sign at {len(cross['im'])} grid edges, all with |y| <= {np.abs(cross['im'][:, 1]).max():.2g}")
print(f"  Re P changes sign at {len(cross['re'])} edges, for {np.abs(cross['re'][:, 1]).min():.2f} <= |y| <= {np.abs(cross['re'][:, 1]).max():.2f}")
print(f"  cells where both change sign: {len(cross['both'])}")

# The minimum feeds a bound on the Hardy-space norm of H. Compare the
# bound with a direct numerical estimate for the non-viscous case.
p0 = PhysParams(kappa=0.5)
m = DecayModel(p0)
p_min = scan_P_min((0.0, 5.0, -20.0, 20.0), 200, p0)["min_abs"]
norm = np.sqrt(hardy_norm_estimate(lambda s: m.H(s)))
print()
print(f"kappa=0.5, nu=0: ||H|| ~ {norm:.4f}, bound with constant 10: {hardy_bound_H(p0, p_min):.2f}")
