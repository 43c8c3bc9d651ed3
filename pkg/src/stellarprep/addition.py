"""Heralded approximations of photon addition, simulated in a truncated Fock space.

Both schemes couple the target mode to one ancilla and post-select the
ancilla.  The target mode and the ancilla are evolved exactly with a dense
matrix exponential; the other modes of the input are spectators.
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np
import scipy.linalg

from .fock import CoreState

__all__ = ["TruncationError", "approx_addition_beamsplitter", "approx_addition_squeezer"]

# two-mode dense space of (cutoff+1)^2 levels; beyond this expm gets slow
_MAX_CUTOFF = 60


class TruncationError(RuntimeError):
    pass


def _ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def _evolve(vectors, generator, ancilla_in: int, ancilla_out: int, cutoff: int):
    """Apply ``exp(G)`` to ``v (x) |ancilla_in>`` and project on ``<ancilla_out|``.

    Returns the projected vectors and the weight left on the top Fock level.
    """
    a = _ladder(cutoff)
    I = np.eye(cutoff + 1)
    a1, a2 = np.kron(a, I), np.kron(I, a)
    U = scipy.linalg.expm(generator(a1, a2))
    anc = np.zeros(cutoff + 1)
    anc[ancilla_in] = 1.0
    out, leak = [], 0.0
    for v in vectors:
        full = (U @ np.kron(v, anc)).reshape(cutoff + 1, cutoff + 1)
        leak += np.sum(np.abs(full[-1, :]) ** 2) + np.sum(np.abs(full[:, -1]) ** 2)
        out.append(full[:, ancilla_out])
    return out, leak


def _split_mode(state: CoreState, mode: int):
    """Group amplitudes by the occupation of all modes other than ``mode``."""
    groups = defaultdict(dict)
    for n, amp in state:
        rest = n[:mode] + n[mode + 1 :]
        groups[rest][n[mode]] = amp
    return groups


def _herald(state: CoreState, mode: int, generator, ancilla_in, ancilla_out, cutoff, audit, grow, max_cutoff=_MAX_CUTOFF):
    if not 0 <= mode < state.modes:
        raise IndexError("mode out of range")
    state = state.normalized()
    groups = _split_mode(state, mode)
    while True:
        if cutoff > max_cutoff:
            raise TruncationError(f"leakage above {audit:g} at the maximal cutoff")
        vecs = []
        for amps in groups.values():
            v = np.zeros(cutoff + 1, dtype=complex)
            for k, amp in amps.items():
                v[k] = amp
            vecs.append(v)
        out, leak = _evolve(vecs, generator, ancilla_in, ancilla_out, cutoff)
        if leak < audit:
            break
        if not grow:
            raise TruncationError(f"truncation leakage {leak:.3g} above {audit:g}")
        cutoff += 4
    terms = {}
    for rest, vec in zip(groups, out):
        for k, amp in enumerate(vec):
            if amp != 0:
                terms[rest[:mode] + (k,) + rest[mode:]] = amp
    conditioned = CoreState.from_dict(terms, state.modes)
    prob = conditioned.norm() ** 2
    if prob == 0:
        raise TruncationError("heralding outcome has zero probability")
    return conditioned.normalized(), float(prob)


def approx_addition_beamsplitter(state: CoreState, mode: int, theta: float, audit: float = 1e-12):
    """Mix ``mode`` with a single photon on a beamsplitter of angle ``theta`` and herald vacuum.

    The beamsplitter conserves photon number, so a cutoff of the input photon
    number plus two is exact.  Returns ``(normalized state, probability)``.
    """
    if not 0 < theta < np.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    cutoff = int(state.photon_numbers.max(initial=0)) + 2
    gen = lambda a1, a2: theta * (a1.T @ a2 - a1 @ a2.T)
    return _herald(state, mode, gen, 1, 0, cutoff, audit, grow=False)


def approx_addition_squeezer(state: CoreState, mode: int, xi: float, audit: float = 1e-10, max_cutoff: int = _MAX_CUTOFF):
    """Two-mode squeeze ``mode`` with a vacuum ancilla and herald one ancilla photon.

    The cutoff grows until the weight on the top Fock level falls below
    ``audit``.  Returns ``(normalized state, probability)``.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    cutoff = int(state.photon_numbers.max(initial=0)) + 2
    gen = lambda a1, a2: xi * (a1.T @ a2.T - a1 @ a2)
    return _herald(state, mode, gen, 0, 1, cutoff, audit, grow=True, max_cutoff=max_cutoff)
