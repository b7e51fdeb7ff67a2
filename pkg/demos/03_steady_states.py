# Steady states of (Z_11 + alpha Z_22) w * w = w on (0, pi)^2.
# Pick any vanishing set E, put w = 0 there and solve L w = 1 on the rest:
# then (L w - 1) w = 0 everywhere. L is diagonal on the sine basis with
# multiplier (k1^2 + alpha k2^2)/|k|^2, bounded below by min(1, alpha).
import numpy as np

from vortlab import RestrictedProblem, VanishingSet, solve_restricted
from vortlab.spectral import SineField
from vortlab.steady import apply_L_grid, coercivity_check, rayleigh_quotient

n = 64
for alpha in (0.25, 0.5, 2.0, 4.0):
    for name, E in (("left half", VanishingSet.left_half(n)), ("random 30%", VanishingSet.random(n, np.random.default_rng(0)))):
        w, cert = solve_restricted(RestrictedProblem(alpha, E))
        resid = np.abs(apply_L_grid(alpha, w) * w - w).max()
        print(
            f"alpha={alpha:<5} E={name:<11} CG its {cert.iterations:4d}  off-E residual {cert.off_E_residual:.1e}  "
            f"max|(Lw)w - w| {resid:.1e}  max w {w.max():.3f}"
        )

print("\ncoercivity: smallest Rayleigh quotient over 1000 random fields")
for alpha in (0.25, 0.5, 2.0, 4.0):
    print(f"  alpha={alpha:<5} min quotient {coercivity_check(alpha, 1000):.6f}   bound min(1, alpha) = {min(1, alpha)}")

# for alpha > 1 the infimum is 1, approached by modes with k2 = 1 and k1 large
c = np.zeros((n, n))
c[n - 1, 0] = 1.0
print(f"\nalpha=4, mode (k1, k2) = ({n}, 1): quotient {rayleigh_quotient(4.0, SineField(c)):.6f}")
