"""Two-photon targets need only rank(B) additions through the e2 route.

Each random state below is written as x^T B x, factored into
W^T A W with A the matrix of e_2, and prepared with M additions and a single
PNR detection of M - 2 photons.
"""
import numpy as np

from stellarprep import builtin_state, synthesize_e2
from stellarprep.states import random_two_photon_state

for name in ("psi1", "psi4", "psi6", "psi8"):
    _, rep = synthesize_e2(builtin_state(name))
    print(f"{name}: additions {rep.additions}, PNR {rep.pnr_order}, p = {rep.success_probability:.3f} at alpha {rep.alpha:.3f}")

rng = np.random.default_rng(1)
for M in (3, 4, 5, 6):
    fids = [synthesize_e2(random_two_photon_state(M, rng))[1].fidelity for _ in range(20)]
    print(f"M={M}: 20 random states, min fidelity {min(fids):.12f}")
