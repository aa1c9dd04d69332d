"""How much of the ideal coupling survives a real mirror pair.

The aperture dyadic Gamma_rel measures which dipole orientations the mirrors
connect. Aluminum's finite conductivity then costs a bit more, and a single
mode fiber can only capture part of the collimated sigma field.
"""
import math

import numpy as np

from ionmirror.geometry import (
    MirrorGeometry,
    efficiency_eta,
    gamma_rel,
    helicity_cross_overlap,
    max_fiber_coupling,
)

geom = MirrorGeometry()
print("aperture 20 to 135 degrees")
print("Gamma_rel diagonal:", np.round(np.diag(gamma_rel(geom)), 8))
print(f"photon delay tau = {geom.tau * 1e6:.4f} us")
print(f"eta (aluminum)          = {efficiency_eta(geom):.5f}")
print(f"eta (perfect conductor) = {efficiency_eta(MirrorGeometry(epsilon=math.inf)):.5f}")
print(f"sigma+/sigma- crosstalk  = {abs(helicity_cross_overlap(geom)):.1e}")

print("\nopening the aperture towards full coverage:")
for tmax in (90, 120, 135, 160, 180):
    g = MirrorGeometry(theta_min=0.0, theta_max=math.radians(tmax), epsilon=math.inf)
    print(f"  0..{tmax:3d} deg: eta = {efficiency_eta(g):.4f}")

waist, best = max_fiber_coupling()
print(f"\nbest fiber coupling {best:.4f} at waist {waist:.3f} f; through two fibers {best**2:.4f}")
