"""Preparation circuits from polynomial decompositions.

Every route builds a factorizable seed ``prod_i (f_i . x)`` by alternating
photon additions on mode 0 with interferometers, then carves the target out
of it with post-selection on the ancilla mode(s).
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, Displace, DisplacedSubtract, Interferometer, PhotonAdd, PNRProject, VacuumProject
from .fock import (
    CoreState,
    StellarPolynomial,
    bombieri_norm,
    homogenize,
    state_to_polynomial,
)
from .linalg import takagi, unitary_completion
from .simulator import execute, fidelity, graded_probability, optimize_alpha
from .tensor import AdamOptions, SymmetricTensor, WaringModel, rank_search_all

__all__ = [
    "LinearForm",
    "SynthesisError",
    "SynthesisReport",
    "build_seed_forms",
    "forms_to_circuit",
    "expand_forms",
    "waring_probability",
    "synthesize_waring",
    "e2_matrix",
    "quadratic_form_matrix",
    "e2_decomposition",
    "synthesize_e2",
    "ghz_roots",
    "synthesize_ghz",
    "synthesize_product",
    "catalysis_lower_bound",
    "ALPHA_BRACKET",
]

logger = logging.getLogger(__name__)

ALPHA_BRACKET = (1e-2, 1e2)
RANK_TOL = 1e-10


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearForm:
    """``sum_j c_j x_j`` over the working variables (ancilla first)."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).ravel()
        if not np.any(c != 0):
            raise SynthesisError("linear form is identically zero")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return len(self.coefficients)

    def polynomial(self) -> StellarPolynomial:
        return StellarPolynomial.linear(self.coefficients)


@dataclass
class SynthesisReport:
    method: str
    additions: int
    pnr_order: int
    ancilla_count: int
    fidelity: float
    success_probability: float
    total_probability: float
    alpha: float
    rank: int | None = None
    subtractions: int = 0
    residual: float | None = None
    restart_probabilities: list = field(default_factory=list)
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def expand_forms(forms: Sequence[LinearForm]) -> StellarPolynomial:
    """Product of the forms by direct polynomial multiplication."""
    n = len(forms[0])
    out = StellarPolynomial.constant(1.0, n)
    for f in forms:
        out = out * f.polynomial()
    return out


def _omega(n: int, k: int = 1) -> complex:
    return cmath.exp(2j * math.pi * k / n)


def build_seed_forms(W, d: int, alpha: float = 1.0) -> list[LinearForm]:
    """Forms ``lambda - w_(2d) w_d^i alpha w_k . x`` with product ``prod_k (lambda^d + alpha^d (w_k . x)^d)``.

    ``k`` runs over the rows of ``W`` (outer loop) and ``i`` over ``0..d-1``.
    """
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    out = []
    for w in W:
        for i in range(d):
            c = _omega(2 * d) * _omega(d, i) * alpha
            out.append(LinearForm(np.concatenate([[1.0], -c * w])))
    return out


def forms_to_circuit(forms: Sequence[LinearForm], rng: np.random.Generator | None = None) -> Circuit:
    """Photon additions on mode 0 and interferometers preparing ``prod_i (f_i . a^dag)|0>``.

    The first form is realized by the last block in time.  After choosing
    the interferometer ``U`` for a form, the remaining forms are rewritten in
    the variables seen before ``U`` acts.
    """
    if not forms:
        raise SynthesisError("no forms to synthesize")
    n = len(forms[0])
    if any(len(f) != n for f in forms):
        raise SynthesisError("forms have different lengths")
    remaining = [f.coefficients.copy() for f in forms]
    blocks = []
    for idx in range(len(remaining)):
        w = remaining[idx]
        if np.linalg.norm(w) < RANK_TOL:
            raise SynthesisError(f"form {idx} vanished during back-substitution")
        completion = unitary_completion(w, rng)
        U = completion.conj().T  # column 0 is w / |w|
        blocks.append((PhotonAdd(0), Interferometer(U)))
        Uc = np.conj(U)
        for j in range(idx + 1, len(remaining)):
            remaining[j] = remaining[j] @ Uc
    ops = []
    for add, inter in reversed(blocks):
        ops.extend([add, inter])
    return Circuit(n, tuple(ops)).validate()


def _elementary_products(polys: Sequence[StellarPolynomial]) -> list[StellarPolynomial]:
    """``e_s(p_1, ..., p_r)`` for ``s = 0..r`` via the usual recurrence."""
    n = polys[0].nvars
    E = [StellarPolynomial.constant(1.0, n)] + [StellarPolynomial(n) for _ in polys]
    for k, p in enumerate(polys, start=1):
        for s in range(k, 0, -1):
            E[s] = E[s] + E[s - 1] * p
    return E


def _grade_weights(E: Sequence[StellarPolynomial], ancilla_powers: Sequence[int]) -> dict[int, float]:
    """Heralding weights keyed by the degree outside the ancilla."""
    out = {}
    for e, a in zip(E, ancilla_powers):
        if e.is_zero():
            continue
        out[e.degree] = math.factorial(a) * bombieri_norm(e) ** 2
    return out


def waring_probability(W, d: int, bracket=ALPHA_BRACKET) -> tuple[float, float, dict]:
    """Optimal scale and heralding probability of the seed built from ``W``.

    Returns ``(alpha, probability, grade_weights)``; the weights describe the
    seed at ``alpha = 1``.
    """
    W = np.atleast_2d(W)
    r = len(W)
    powers = [StellarPolynomial.linear(w) ** d for w in W]
    E = _elementary_products(powers)
    weights = _grade_weights(E, [d * (r - s) for s in range(r + 1)])
    alpha, p = optimize_alpha(lambda a: graded_probability(weights, d, a), bracket)
    return alpha, p, weights


def _max_normalized(poly: StellarPolynomial) -> tuple[StellarPolynomial, float]:
    scale = float(np.abs(poly.coeffs).max())
    return poly / scale, scale


def _target_polynomial(target) -> StellarPolynomial:
    if isinstance(target, CoreState):
        return state_to_polynomial(target)
    if isinstance(target, StellarPolynomial):
        return target
    raise TypeError("target must be a CoreState or StellarPolynomial")


def _dehomogenize_ops(homogenized: bool) -> tuple:
    return (Displace(1, 1.0), VacuumProject(1)) if homogenized else ()


def _verify(circuit: Circuit, target: StellarPolynomial):
    sim = execute(circuit)
    if sim.polynomial.nvars != target.nvars:
        raise SynthesisError("circuit output has the wrong number of modes")
    return sim, fidelity(sim.polynomial, target)


def synthesize_waring(
    target,
    restarts: int = 25,
    seed: int = 0,
    threshold: float = 1e-6,
    opts: AdamOptions = AdamOptions(),
    bracket=ALPHA_BRACKET,
    models: Sequence[WaringModel] | None = None,
) -> tuple[Circuit, SynthesisReport]:
    """Waring route: rank search, seed forms, heralding on ``d(r-1)`` ancilla photons.

    Among the successful restarts the one with the highest optimized
    heralding probability is kept.  Pass ``models`` to skip the search.
    """
    poly = _target_polynomial(target)
    homogenized = not poly.is_homogeneous()
    work = homogenize(poly, 0) if homogenized else poly
    work, _ = _max_normalized(work)
    d = work.degree
    if d < 1:
        raise SynthesisError("target has no photons")
    if models is None:
        models = rank_search_all(work, restarts=restarts, threshold=threshold, seed=seed, opts=opts)
    scored = []
    for m in models:
        alpha, p, _ = waring_probability(m.W, d, bracket)
        scored.append((p, -m.residual, alpha, m))
    scored.sort(key=lambda t: (t[0], t[1]), reverse=True)
    p_best, _, alpha, model = scored[0]
    r = model.rank
    forms = build_seed_forms(model.W, d, alpha)
    circuit = forms_to_circuit(forms).append(PNRProject(0, d * (r - 1)), *_dehomogenize_ops(homogenized))
    sim, fid = _verify(circuit, poly)
    report = SynthesisReport(
        method="waring_e1",
        additions=circuit.additions,
        pnr_order=circuit.pnr_order,
        ancilla_count=1 + homogenized,
        fidelity=fid,
        success_probability=sim.steps[0][2],
        total_probability=sim.accumulated_probability,
        alpha=alpha,
        rank=r,
        residual=model.relative_residual,
        restart_probabilities=[t[0] for t in sorted(scored, key=lambda t: t[3].seed)],
        seed=model.seed,
    )
    return circuit, report


# -- quadratic route ----------------------------------------------------------


def e2_matrix(M: int) -> np.ndarray:
    """``A`` with ``e_2(x) = x^T A x``."""
    return (np.ones((M, M)) - np.eye(M)) / 2


def quadratic_form_matrix(poly: StellarPolynomial) -> np.ndarray:
    """Symmetric ``B`` with ``poly(x) = x^T B x`` for a homogeneous quadratic."""
    if not poly.is_homogeneous() or poly.degree != 2:
        raise SynthesisError("expected a homogeneous quadratic polynomial")
    M = poly.nvars
    B = np.zeros((M, M), dtype=complex)
    for e, c in zip(poly.exps, poly.coeffs):
        idx = np.flatnonzero(e)
        if len(idx) == 1:
            B[idx[0], idx[0]] = c
        else:
            B[idx[0], idx[1]] = B[idx[1], idx[0]] = c / 2
    return B


def _symmetric_sqrt_factor(B: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """``S`` with ``S^T S = B``, one row per nonzero Takagi value (principal square roots)."""
    if np.allclose(B.imag, 0, atol=tol):
        # real symmetric: orthogonal eigenbasis, negative eigenvalues get a factor i
        lam, V = np.linalg.eigh(B.real)
        keep = np.abs(lam) > tol * max(1.0, np.abs(lam).max())
        return np.sqrt(lam[keep].astype(complex))[:, None] * V[:, keep].T
    d, U = takagi(B)
    keep = d > tol * max(1.0, d.max())
    return np.sqrt(d[keep])[:, None] * U[keep]


def e2_decomposition(B: np.ndarray) -> np.ndarray:
    """Rows ``w_k`` with ``W^T A W = B`` where ``A`` is the ``e_2`` matrix of size ``rank(B)``."""
    S_B = _symmetric_sqrt_factor(np.asarray(B, dtype=complex))
    Mp = len(S_B)
    if Mp < 2:
        raise SynthesisError("quadratic form has rank < 2; it is a squared linear form")
    S_A = _symmetric_sqrt_factor(e2_matrix(Mp).astype(complex))
    return np.linalg.solve(S_A, S_B)


def synthesize_e2(target, bracket=ALPHA_BRACKET) -> tuple[Circuit, SynthesisReport]:
    """Quadratic route: ``rank(B)`` additions and heralding on ``rank(B) - 2`` photons."""
    poly = _target_polynomial(target)
    if poly.degree != 2:
        raise SynthesisError(f"the quadratic route needs a two-photon target, got degree {poly.degree}")
    homogenized = not poly.is_homogeneous()
    work = homogenize(poly, 0) if homogenized else poly
    work, _ = _max_normalized(work)
    W = e2_decomposition(quadratic_form_matrix(work))
    Mp = len(W)
    E = _elementary_products([StellarPolynomial.linear(w) for w in W])
    weights = _grade_weights(E, [Mp - s for s in range(Mp + 1)])
    alpha, p = optimize_alpha(lambda a: graded_probability(weights, 2, a), bracket)
    forms = [LinearForm(np.concatenate([[1.0], alpha * w])) for w in W]
    circuit = forms_to_circuit(forms).append(PNRProject(0, Mp - 2), *_dehomogenize_ops(homogenized))
    sim, fid = _verify(circuit, poly)
    report = SynthesisReport(
        method="e2",
        additions=circuit.additions,
        pnr_order=circuit.pnr_order,
        ancilla_count=1 + homogenized,
        fidelity=fid,
        success_probability=sim.steps[0][2],
        total_probability=sim.accumulated_probability,
        alpha=alpha,
        rank=Mp,
    )
    return circuit, report


# -- GHZ route ----------------------------------------------------------------


def ghz_roots(M: int) -> list[complex]:
    """Roots of ``z^M + M!`` sorted by argument."""
    radius = math.factorial(M) ** (1.0 / M)
    roots = [radius * cmath.exp(1j * math.pi * (2 * j + 1) / M) for j in range(M)]
    return sorted(roots, key=cmath.phase)


def synthesize_ghz(M: int) -> tuple[Circuit, SynthesisReport]:
    """GHZ route: seed ``prod_k (lambda + x_k)`` and projection of the ancilla on ``|0> + |M>/sqrt(M!)``.

    The projector factors into displaced annihilations ``a - conj(r)`` over
    the roots of ``z^M + M!`` followed by a vacuum projection.
    """
    if M < 2:
        raise SynthesisError("GHZ route needs at least two modes")
    forms = []
    for k in range(M):
        c = np.zeros(M + 1, dtype=complex)
        c[0] = 1.0
        c[k + 1] = 1.0
        forms.append(LinearForm(c))
    circuit = forms_to_circuit(forms)
    circuit = circuit.append(*[DisplacedSubtract(0, r) for r in ghz_roots(M)], VacuumProject(0))
    target = StellarPolynomial.from_dict({(0,) * M: 1.0, (1,) * M: 1.0}, M)
    sim, fid = _verify(circuit, target)
    report = SynthesisReport(
        method="ghz",
        additions=circuit.additions,
        pnr_order=0,
        ancilla_count=1,
        fidelity=fid,
        success_probability=sim.accumulated_probability,
        total_probability=sim.accumulated_probability,
        alpha=1.0,
        subtractions=circuit.count(DisplacedSubtract),
    )
    return circuit, report


# -- direct product -----------------------------------------------------------


def synthesize_product(forms: Sequence, target=None) -> tuple[Circuit, SynthesisReport]:
    """Seed-only circuit for a target given as a product of linear forms (no ancilla)."""
    forms = [f if isinstance(f, LinearForm) else LinearForm(f) for f in forms]
    circuit = forms_to_circuit(forms)
    expected = expand_forms(forms) if target is None else _target_polynomial(target)
    sim, fid = _verify(circuit, expected)
    report = SynthesisReport(
        method="direct_product",
        additions=circuit.additions,
        pnr_order=0,
        ancilla_count=0,
        fidelity=fid,
        success_probability=1.0,
        total_probability=1.0,
        alpha=1.0,
    )
    return circuit, report


def catalysis_lower_bound(target) -> int:
    """``max(d, intrinsic modes)`` for a homogeneous target.

    Intrinsic modes are counted as the rank of the first-index flattening of
    the symmetric coefficient tensor.
    """
    poly = _target_polynomial(target)
    if not poly.is_homogeneous():
        raise SynthesisError("catalysis bound needs a homogeneous target")
    d = poly.degree
    if d == 0:
        return 0
    s = np.linalg.svd(SymmetricTensor(poly).unfolding(), compute_uv=False)
    intrinsic = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
    return max(d, intrinsic)
