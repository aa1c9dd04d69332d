"""Checking that both ions landed in qubit states without destroying them.

A weak off-resonant pulse picks up a small phase only if the ion sits in a
qubit state. The discrimination error falls as more probe light reaches the
detector, but every bit reflected off the beam splitter is also taken from
the entangling photon.
"""
from ionmirror.postselect import (
    ProbeConfig,
    error_vs_reflectivity,
    operating_reflectivities,
    postselection_fidelity,
    success_reduction,
    threshold_reflectivity,
)

cfg = ProbeConfig()
print(f"phase shift {cfg.phase_shift:.4f} rad, {cfg.photons_at_ion:.1f} photons at the ion")
r, e1 = error_vs_reflectivity(cfg, 1, [0.1, 0.3, 0.5, 0.7, 0.9])
_, e2 = error_vs_reflectivity(cfg, 2, r)
print(f"{'R':>5} {'error ion 1':>12} {'error ion 2':>12}")
for row in zip(r, e1, e2):
    print(f"{row[0]:5.2f} {row[1]:12.3e} {row[2]:12.3e}")

r1, r2 = threshold_reflectivity(cfg, 1), threshold_reflectivity(cfg, 2)
print(f"\nthresholds for error {cfg.error_threshold}: R1 = {r1:.3f}, R2 = {r2:.3f}")
op1, op2 = operating_reflectivities(cfg)
print(f"success reduction at the operating point: {success_reduction(op1, op2):.3f}")
print(f"fidelity after postselection: {postselection_fidelity(cfg):.5f}")
print(f"  (leakage alone, delta = 0.05: {postselection_fidelity(cfg, 0.05, include_detection_errors=False):.6f})")
