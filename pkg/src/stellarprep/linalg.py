"""Small dense linear-algebra routines used by circuit synthesis."""
from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = ["takagi", "gram_schmidt", "unitary_completion", "is_unitary", "PIVOT_TOL"]

PIVOT_TOL = 1e-10


def is_unitary(U, atol: float = 1e-10) -> bool:
    U = np.asarray(U)
    return U.shape[0] == U.shape[1] and np.allclose(U @ U.conj().T, np.eye(len(U)), atol=atol)


def takagi(B, tol: float = 1e-12):
    """Autonne-Takagi factorization of a complex symmetric matrix.

    Returns ``(d, U)`` with ``d >= 0`` sorted in decreasing order and ``U``
    unitary such that ``B = U.T @ diag(d) @ U``.

    Uses the real symmetric embedding ``[[Re B, Im B], [Im B, -Re B]]`` whose
    eigenpairs ``(s, [x; y])`` with ``s > 0`` give Takagi vectors
    ``x + i y``; this stays well defined for repeated singular values.
    """
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("B must be square")
    if not np.allclose(B, B.T, atol=1e-10 * max(1.0, np.abs(B).max(initial=0))):
        raise ValueError("B must be symmetric")
    n = len(B)
    X, Y = B.real, B.imag
    emb = np.block([[X, Y], [Y, -X]])
    vals, vecs = np.linalg.eigh(emb)
    order = np.argsort(vals)[::-1][:n]
    vals, vecs = vals[order], vecs[:, order]
    scale = max(1.0, abs(vals[0]))
    positive = vals > tol * scale
    Q = vecs[:n, positive] + 1j * vecs[n:, positive]
    d = np.clip(vals, 0.0, None)
    if positive.sum() < n:
        # null directions: any orthonormal completion satisfies B conj(q) = 0
        comp = scipy.linalg.null_space(Q.conj().T) if positive.any() else np.eye(n, dtype=complex)
        Q = np.hstack([Q, comp[:, : n - positive.sum()]])
        d = np.where(positive, d, 0.0)
    # B = Q diag(d) Q^T with columns of Q the Takagi vectors
    return d, Q.T


def gram_schmidt(rows, tol: float = PIVOT_TOL) -> np.ndarray:
    """Modified Gram-Schmidt on the rows of a square matrix.

    Raises ``np.linalg.LinAlgError`` when a pivot norm drops below ``tol``.
    """
    V = np.array(rows, dtype=complex)
    for i in range(len(V)):
        for j in range(i):
            V[i] -= np.vdot(V[j], V[i]) * V[j]
        norm = np.linalg.norm(V[i])
        if norm < tol:
            raise np.linalg.LinAlgError(f"Gram-Schmidt breakdown at row {i} (pivot {norm:.3g})")
        V[i] /= norm
    return V


def unitary_completion(w, rng: np.random.Generator | None = None) -> np.ndarray:
    """Unitary ``U`` with ``U^dagger e_0 = w / |w|``.

    Only the support of ``w`` is mixed: the completion basis is built on the
    nonzero entries, the remaining coordinates are carried by an identity
    block, and coordinate 0 is routed to the first support index when ``w``
    has no weight there.
    """
    w = np.asarray(w, dtype=complex)
    n = len(w)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValueError("cannot complete the zero vector")
    support = np.flatnonzero(w != 0)
    ns = len(support)
    V = np.eye(ns, dtype=complex)
    # first row is conj(w) so that the first column of U^dagger is w
    V[0] = np.conj(w[support])
    try:
        V = gram_schmidt(V)
    except np.linalg.LinAlgError:
        rng = rng or np.random.default_rng(0)
        for _ in range(8):
            # rotate the non-leading basis vectors and retry
            Z = rng.normal(size=(ns, ns)) + 1j * rng.normal(size=(ns, ns))
            Qr, _ = np.linalg.qr(Z)
            trial = Qr.T.copy()
            trial[0] = np.conj(w[support])
            try:
                V = gram_schmidt(trial)
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise
    U = np.zeros((n, n), dtype=complex)
    rows = np.concatenate([[0], support[1:]])
    U[np.ix_(rows, support)] = V
    for j in range(1, n):
        if j not in support:
            U[j, j] = 1.0
    if support[0] != 0:
        U[support[0], 0] = 1.0
    return U
