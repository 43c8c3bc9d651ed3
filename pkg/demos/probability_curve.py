"""Heralding probability as a function of the decomposition scale.

For W = w I the probability has a closed form; the simulated circuits agree
with it, and the optimum for two photons in four modes sits near w = 1.45.
Writes curve.csv next to this script.
"""
import os

import numpy as np

from stellarprep import PNRProject, build_seed_forms, emit_probability_curve, forms_to_circuit, identity_probability, optimize_alpha
from stellarprep.simulator import success_probability


def simulated(w, d=2, M=4):
    circuit = forms_to_circuit(build_seed_forms(w * np.eye(M), d)).append(PNRProject(0, d * (M - 1)))
    return success_probability(circuit)


for w in (0.5, 1.0, 1.45, 2.0):
    print(f"w={w:4}: simulated {simulated(w):.12f}  closed form {identity_probability(2, 4, w):.12f}")

w_star, p_star = optimize_alpha(lambda w: float(identity_probability(2, 4, w)))
print(f"optimum w = {w_star:.4f}, probability {p_star:.4f}")

curve = emit_probability_curve(simulated, np.linspace(0, 3, 31))
path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "curve.csv")
curve.write(path)
print("wrote", path)
