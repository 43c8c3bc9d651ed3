"""How close heralded schemes get to an ideal photon addition.

A beamsplitter with a single-photon ancilla (herald vacuum) and a two-mode
squeezer with a vacuum ancilla (herald one photon) both approach a^dagger as
the coupling goes to zero, with an error quadratic in the coupling.
"""
import numpy as np

from stellarprep import CoreState, apply_creation, approx_addition_beamsplitter, approx_addition_squeezer, polynomial_to_state, state_to_polynomial

psi = CoreState.from_dict({(0,): 1.0, (2,): 1.0}).normalized()
ideal = polynomial_to_state(apply_creation(state_to_polynomial(psi), 0)).normalized()


def distance(out):
    a, b = out.as_dict(), ideal.as_dict()
    overlap = sum(np.conj(v) * a.get(n, 0) for n, v in b.items())
    phase = overlap / abs(overlap)
    return np.sqrt(sum(abs(a.get(n, 0) - phase * b.get(n, 0)) ** 2 for n in set(a) | set(b)))


ts = np.logspace(-3, -1, 5)
for label, model in (("beamsplitter", approx_addition_beamsplitter), ("squeezer", approx_addition_squeezer)):
    errs, probs = zip(*[(distance(model(psi, 0, t)[0]), model(psi, 0, t)[1]) for t in ts])
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    print(f"{label}: error slope {slope:.3f}")
    for t, e, p in zip(ts, errs, probs):
        print(f"   t={t:.0e}  error {e:.3e}  herald probability {p:.3e}")
