"""Attempts per second and heralded pairs per second.

Each attempt costs preparation, the photon's round trip plus classical
signalling, and the probe. Cooling between attempts dominates unless the
ions tolerate many attempts per cooling cycle.
"""
from dataclasses import replace

from ionmirror.budget import BudgetLedger, entanglement_rate, repetition_rate, report_rows

ledger = BudgetLedger()
for name, value in report_rows(ledger):
    print(f"{name:36s} {value:.6g}")

print("\ntrials per cooling cycle:")
for n in (1, 10, 40, 80, 200):
    led = replace(ledger, trials_per_cooling=n)
    print(f"  {n:4d}: {repetition_rate(led):8.1f} Hz, {entanglement_rate(led):6.1f} pairs/s")
