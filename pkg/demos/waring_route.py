"""Prepare |Psi4> = (|2000> + |0200> + |0020> + |0002>)/2 with one heralding ancilla.

The state's polynomial is a sum of four squares, so it has a rank-4 Waring
decomposition.  The seed uses 2*4 photon additions and the ancilla is
heralded on 6 photons.
"""
import numpy as np

from stellarprep import builtin_state, execute, fidelity, state_to_polynomial, synthesize_waring

target = builtin_state("psi4")
print("target polynomial:", state_to_polynomial(target))

circuit, report = synthesize_waring(target, restarts=25, seed=0)
print(f"rank {report.rank}, additions {report.additions}, PNR {report.pnr_order}")
print(f"scale alpha = {report.alpha:.4f}, heralding probability = {report.success_probability:.4f}")
print("restart-wise probabilities:", np.round(sorted(report.restart_probabilities), 3))

out = execute(circuit)
print("output fidelity:", fidelity(out.state, target))
print("heralded state:")
for n, amp in out.state:
    print("  ", n, np.round(amp, 6))
