"""Heralded state after both ions return to the ground manifold.

Postselecting both ions in |S,1,+-1> leaves a two-qubit block. Without a
differential Zeeman shift it is the singlet with probability 4/27; a shift
delta labels the photon's frequency and erodes the coherence.
"""
import numpy as np

from ionmirror.density import closed_form_post, simulate_post

print(f"{'delta':>6} {'success':>10} {'fidelity':>10} {'closed-form F':>14}")
for delta in np.arange(0.0, 5.01, 0.5):
    post, gd = simulate_post(float(delta))
    ref = closed_form_post(float(delta))
    print(f"{delta:6.2f} {post.success_probability:10.6f} {post.fidelity_singlet:10.6f} {ref.fidelity_singlet:14.6f}")

post, gd = simulate_post(0.0)
print(f"\nground trace + excited population = {gd.trace + gd.excited_population:.15f}")
print("normalised block at delta = 0 (basis 00, 01, 10, 11):")
print(np.round(post.normalized.real, 6))
