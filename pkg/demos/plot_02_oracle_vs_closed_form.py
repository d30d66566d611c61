"""
Closed forms against a signal-level simulation
==============================================

The campaign only ever evaluates closed-form SINRs. Here a small network
(16 antennas, 4 users) is simulated symbol by symbol: pilots, MMSE
estimates, matched filtering and conjugate beamforming. Each received
sample is split into desired signal, estimation error, inter-user
interference, noise and gain uncertainty, and the empirical power of each
piece is set beside its formula.
"""

import time

from hmmimo.oracle import oracle_instance, validate

inst = oracle_instance(seed=2024)
start = time.perf_counter()
rows = validate(inst, trials=100_000, seed=7)
print(f"{len(rows)} comparisons in {time.perf_counter() - start:.1f} s\n")

##############################################################################
# Term by term
# ------------

print(f"{'path':6} {'user':>4} {'term':>10} {'simulated':>12} {'formula':>12} {'error':>7}")
for r in rows:
    if r.quantity.startswith(("tx_power", "psi")):
        continue
    print(f"{r.path:6} {r.user:4d} {r.quantity:>10} {r.empirical:12.4e} {r.closed_form:12.4e} {r.rel_error:7.2%}")

##############################################################################
# Side checks
# -----------
# Full-power control should fill each CBS antenna's budget, and the
# far users' DL-pilot estimates should carry the predicted variance.

side = [r for r in rows if r.quantity.startswith(("tx_power", "psi"))]
worst = max(side, key=lambda r: r.rel_error)
print(f"\n{len(side)} power and DL-estimate checks, worst {worst.quantity} off by {worst.rel_error:.2%}")
print("all passed" if all(r.passed for r in rows) else "SOME CHECKS FAILED")
