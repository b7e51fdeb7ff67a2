# Sign structure of the zero-order operators, and the 3D velocity.
import numpy as np

from vortlab import EllipsoidForm, PeriodicBox
from vortlab.diagnostics import quadratic_form
from vortlab.models import curl_3d, grad_u_3d, skew_symmetry_residual, velocity_from_vorticity_3d
from vortlab.spectral import SineField

# <Z_11 w, w> >= 0 on the rectangle: the multiplier k1^2/|k|^2 is positive
rng = np.random.default_rng(0)
ratios = [quadratic_form(1, 1, SineField(rng.standard_normal((32, 32)))).ratio for _ in range(200)]
print(f"<Z11 w, w>/|w|^2 over 200 random fields: min {min(ratios):.4f}, max {max(ratios):.4f}")

# Z_12 has multiplier k1 k2/|k|^2 of either sign
box = PeriodicBox(2, 32)
X1, X2 = box.mesh()
for label, f in (("cos(x1 + x2)", np.cos(X1 + X2)), ("cos(x1 - x2)", np.cos(X1 - X2))):
    print(f"<Z12 w, w>/|w|^2 for w = {label}: {quadratic_form(1, 2, f, box).ratio:+.3f}")

# u = -curl Laplace^{-1} w recovers a velocity whose curl is w, when div w = 0
box3 = PeriodicBox(3, 32)
Y1, Y2, Y3 = box3.mesh()
u0 = np.stack([np.sin(Y3), np.sin(Y1), np.sin(Y2)])
w = curl_3d(u0, box3)
rec = velocity_from_vorticity_3d(w, box3)
print(f"\ndiv-free w: |u - u0| = {np.abs(rec.u - u0).max():.1e}, div u = {rec.div_norm:.1e}, curl u - w = {rec.curl_mismatch:.1e}")
G = grad_u_3d(w, box3)
print(f"grad u from Z_ij: max |trace| = {np.abs(G[0, 0] + G[1, 1] + G[2, 2]).max():.1e}")

# a gradient field is not a vorticity: curl of the reconstruction misses it
g = np.stack([-np.sin(Y1), 0 * Y1, 0 * Y1])
print(f"gradient 'vorticity': curl u - w = {velocity_from_vorticity_3d(g, box3).curl_mismatch:.3f}")

# constant vorticity on an ellipsoid: the stretching term vanishes identically
worst = max(
    np.linalg.norm(skew_symmetry_residual(EllipsoidForm.random(rng), rng.standard_normal(3))) for _ in range(1000)
)
print(f"\nstretching of constant vorticity on 1000 random ellipsoids: max {worst:.1e}")
