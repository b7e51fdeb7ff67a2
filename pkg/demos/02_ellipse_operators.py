# Z_ij = d_i d_j Laplace^{-1} with zero Dirichlet data on ellipses.
# The potential of 1 is (q - 1)/(2(a + c)), q the quadratic form, so
#   Z_11 1 = a/(a+c),  Z_22 1 = c/(a+c),  Z_12 1 = b/(2(a+c)).
# Shortley-Weller differences are exact on quadratics: these come out at
# roundoff on every grid. Convergence is visible on a non-polynomial potential.
import numpy as np

from vortlab import EllipseDomain, build_masked_grid
from vortlab.diagnostics import convergence_order
from vortlab.elliptic import apply_Z_bounded
from vortlab.verify import manufactured_z11_errors

for a, b, c in [(1, 0, 1), (2, 0, 1), (1, 1, 1), (1, -0.6, 3)]:
    dom = EllipseDomain(a, b, c)
    g = build_masked_grid(dom, 96)
    bulk = g.bulk(3)
    z11 = apply_Z_bounded(1, 1, g, 1.0)[bulk]
    z12 = apply_Z_bounded(1, 2, g, 1.0)[bulk]
    print(
        f"(a,b,c)=({a},{b},{c}):  Z11 1 = {z11.mean():.12f} (exact {a / (a + c):.12f}),  "
        f"Z12 1 = {z12.mean():+.12f} (exact {b / (2 * (a + c)):+.12f})"
    )

print("\nZ_11 applied to Laplace(phi), phi = (q - 1) exp(x1/2) cos x2, error on {q < 1/2}:")
rows = manufactured_z11_errors(EllipseDomain(2.0, 0.0, 1.0), ns=(64, 128, 256, 512))
for h, e in rows:
    print(f"  h = {h:.5f}   max error = {e:.3e}")
print(f"observed order {convergence_order(rows):.2f}")

# the interior fraction tends to the area ratio of ellipse and bounding square
for n in (32, 64, 128, 256):
    g = build_masked_grid(EllipseDomain(1.0, 0.0, 4.0), n)
    print(f"n={n:4d}  interior fraction {g.interior_fraction():.5f}   pi/8 = {np.pi / 8:.5f}")
