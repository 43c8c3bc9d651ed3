"""Brute-force dense Fock-space simulator used as an independent reference.

States are dense vectors over ``(cutoff+1)**modes`` amplitudes; operators
are explicit Kronecker products.  Nothing here touches the polynomial code.
"""
import math

import numpy as np
import scipy.linalg

from stellarprep.circuit import (
    Displace,
    DisplacedSubtract,
    Interferometer,
    PhotonAdd,
    PNRProject,
    VacuumProject,
)


def ladder(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def mode_op(op, k, modes, cutoff):
    mats = [np.eye(cutoff + 1)] * modes
    mats = list(mats)
    mats[k] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def index(n, cutoff):
    idx = 0
    for v in n:
        idx = idx * (cutoff + 1) + v
    return idx


def dense_state(core, cutoff):
    v = np.zeros((cutoff + 1) ** core.modes, dtype=complex)
    for n, amp in core:
        v[index(n, cutoff)] = amp
    return v


def to_terms(v, modes, cutoff, tol=1e-13):
    out = {}
    for flat in np.flatnonzero(np.abs(v) > tol):
        out[tuple(int(x) for x in np.unravel_index(flat, (cutoff + 1,) * modes))] = v[flat]
    return out


def interferometer(U, cutoff):
    """exp(sum_kj L_kj a_k^dag a_j) with L = log U, so a_j^dag -> sum_k U_kj a_k^dag."""
    M = len(U)
    L = scipy.linalg.logm(U)
    a = ladder(cutoff)
    H = np.zeros(((cutoff + 1) ** M,) * 2, dtype=complex)
    for k in range(M):
        for j in range(M):
            if abs(L[k, j]) > 0:
                H += L[k, j] * mode_op(a.T, k, M, cutoff) @ mode_op(a, j, M, cutoff)
    return scipy.linalg.expm(H)


def project(v, k, bra, modes, cutoff):
    """Contract mode ``k`` with the bra coefficients ``bra[n]``."""
    t = v.reshape((cutoff + 1,) * modes)
    t = np.tensordot(t, bra, axes=([k], [0]))
    return t.reshape(-1)


class DenseSimulator:
    def __init__(self, modes, cutoff):
        self.modes = modes
        self.cutoff = cutoff

    def run(self, circuit):
        """Return ``(terms of the normalized output over unmeasured modes, probability)``."""
        c = self.cutoff
        modes = circuit.total_modes
        v = np.zeros((c + 1) ** modes, dtype=complex)
        v[0] = 1.0
        live = list(range(modes))
        prob = 1.0
        a = ladder(c)
        shifts = {}
        subtract_roots = {}
        norm_before = {}
        for op in circuit.ops:
            m = len(live)
            if isinstance(op, Interferometer):
                v = interferometer(op.matrix, c) @ v
            elif isinstance(op, PhotonAdd):
                v = mode_op(a.T, live.index(op.mode), m, c) @ v
            elif isinstance(op, PNRProject):
                bra = np.zeros(c + 1)
                bra[op.n] = 1.0
                before = np.linalg.norm(v)
                v = project(v, live.index(op.mode), bra, m, c)
                live.remove(op.mode)
                prob *= (np.linalg.norm(v) / before) ** 2
                v = v / np.linalg.norm(v)
            elif isinstance(op, Displace):
                shifts[op.mode] = complex(op.amount)
            elif isinstance(op, DisplacedSubtract):
                norm_before.setdefault(op.mode, np.linalg.norm(v))
                subtract_roots.setdefault(op.mode, []).append(complex(op.root))
                k = live.index(op.mode)
                v = mode_op(a - np.conj(op.root) * np.eye(c + 1), k, m, c) @ v
            elif isinstance(op, VacuumProject):
                k = live.index(op.mode)
                if op.mode in shifts:
                    beta = shifts.pop(op.mode)
                    # <0| D(-conj(beta)) |n> = exp(-|beta|^2/2) beta^n / sqrt(n!)
                    bra = np.array([math.exp(-abs(beta) ** 2 / 2) * beta**n / math.sqrt(math.factorial(n)) for n in range(c + 1)])
                    before = np.linalg.norm(v)
                else:
                    bra = np.zeros(c + 1)
                    bra[0] = 1.0
                    before = norm_before.pop(op.mode, np.linalg.norm(v))
                v = project(v, k, bra, m, c)
                live.remove(op.mode)
                after = np.linalg.norm(v)
                if op.mode in subtract_roots:
                    roots = subtract_roots.pop(op.mode)
                    pi = np.poly(roots)[::-1]  # coefficients of prod (z - r), low order first
                    after /= math.sqrt(sum(abs(pk) ** 2 * math.factorial(n) for n, pk in enumerate(pi)))
                prob *= (after / before) ** 2
                v = v / np.linalg.norm(v)
        return to_terms(v / np.linalg.norm(v), len(live), c), prob
