"""Ion 1 starts excited; watch its photon arrive at ion 2 one delay later.

Ion 1 decays on its own until the photon has crossed to the far focus. Ion 2
then absorbs part of it, with excitation rising as (t - tau)^2 and peaking
2/(3 gamma tau) after the delay.
"""
import numpy as np

from ionmirror.dynamics import build_kernel, evolve, excitation_probability, standard_initial_state, peak_time
from ionmirror.levels import ZeemanConfig, build_level_scheme

GAMMA_TAU = 3.0

scheme = build_level_scheme(ZeemanConfig.from_delta(0.0))
kernel = build_kernel(scheme, gamma_rel=np.eye(3), tau=GAMMA_TAU)
traj = evolve(kernel, standard_initial_state(), 1.99 * GAMMA_TAU)

t, p1 = excitation_probability(traj, 1)
_, p2 = excitation_probability(traj, 2)
print(f"{'t/tau':>6} {'P1':>12} {'P2':>12}")
for k in range(0, t.size, t.size // 12):
    print(f"{t[k] / GAMMA_TAU:6.3f} {p1[k]:12.4e} {p2[k]:12.4e}")

t_peak, p_peak = peak_time(traj, 2)
print(f"\nion 2 peaks at t/tau = {t_peak / GAMMA_TAU:.6f} (expected {1 + 2 / (3 * GAMMA_TAU):.6f}) with P2 = {p_peak:.6f}")
