"""Exact circuit execution on stellar polynomials.

Projections remove their mode from the polynomial, so the final state only
carries the modes that were never measured.  Success probabilities are
ratios of Bombieri norms, which are Fock-space norms of the unnormalized
states.
"""
from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    Displace,
    DisplacedSubtract,
    Interferometer,
    PhotonAdd,
    PNRProject,
    VacuumProject,
)
from .fock import (
    CoreState,
    StellarPolynomial,
    apply_annihilation,
    apply_creation,
    bombieri_inner,
    bombieri_norm,
    fock_project,
    multi_factorial,
    polynomial_to_state,
    shift_variable,
    specialize,
    state_to_polynomial,
    substitute_linear,
)

__all__ = [
    "ImpossibleOutcome",
    "SimState",
    "execute",
    "success_probability",
    "fidelity",
    "heralding_weights",
    "graded_probability",
    "optimize_alpha",
    "identity_probability",
    "ProbabilityCurve",
    "emit_probability_curve",
    "write_atomic",
]


class ImpossibleOutcome(RuntimeError):
    """A post-selection outcome with zero probability."""


@dataclass(frozen=True)
class SimState:
    polynomial: StellarPolynomial
    accumulated_probability: float = 1.0
    normalized: bool = False
    # original circuit mode index of each remaining variable
    live_modes: tuple = ()
    steps: tuple = ()

    @property
    def state(self) -> CoreState:
        return polynomial_to_state(self.polynomial)


@dataclass
class _Pending:
    """Bookkeeping for a displacement or displaced subtractions awaiting a vacuum projection."""

    norm: float
    shift: complex | None = None
    roots: list = field(default_factory=list)


def _prob_ratio(after: float, before: float) -> float:
    return min(1.0, (after / before) ** 2) if before > 0 else 0.0


def execute(circuit: Circuit, initial: StellarPolynomial | None = None, normalize: bool = True) -> SimState:
    """Run ``circuit`` starting from ``initial`` (default vacuum)."""
    circuit.validate()
    poly = initial if initial is not None else StellarPolynomial.constant(1.0, circuit.total_modes)
    if poly.nvars != circuit.total_modes:
        raise CircuitError("initial state has the wrong number of modes")
    live = list(range(circuit.total_modes))
    prob = 1.0
    pending: dict[int, _Pending] = {}
    steps = []

    def var(mode):
        try:
            return live.index(mode)
        except ValueError:
            raise CircuitError(f"mode {mode} was already measured") from None

    for i, op in enumerate(circuit.ops):
        if isinstance(op, Interferometer):
            if pending:
                raise CircuitError("interferometer between a displacement and its vacuum projection")
            if len(live) != circuit.total_modes:
                raise CircuitError("interferometer after a projection is not supported")
            poly = substitute_linear(poly, op.matrix)
        elif isinstance(op, PhotonAdd):
            if op.mode in pending:
                raise CircuitError("photon addition on a mode awaiting vacuum projection")
            poly = apply_creation(poly, var(op.mode))
        elif isinstance(op, PNRProject):
            if op.mode in pending:
                raise CircuitError("PNR detection on a displaced mode")
            before = bombieri_norm(poly)
            poly = fock_project(poly, var(op.mode), op.n)
            live.remove(op.mode)
            p = _prob_ratio(bombieri_norm(poly), before)
            if p == 0 or poly.is_zero():
                raise ImpossibleOutcome(f"outcome n={op.n} on mode {op.mode} has zero probability")
            prob *= p
            steps.append((i, "pnr", p))
            if normalize:
                poly = poly / bombieri_norm(poly)
        elif isinstance(op, Displace):
            if op.mode in pending:
                raise CircuitError("mode already displaced")
            pending[op.mode] = _Pending(bombieri_norm(poly), shift=complex(op.amount))
            poly = shift_variable(poly, var(op.mode), op.amount)
        elif isinstance(op, DisplacedSubtract):
            entry = pending.setdefault(op.mode, _Pending(bombieri_norm(poly)))
            if entry.shift is not None:
                raise CircuitError("subtraction on a displaced mode")
            entry.roots.append(complex(op.root))
            v = var(op.mode)
            poly = apply_annihilation(poly, v) - poly * np.conj(op.root)
        elif isinstance(op, VacuumProject):
            entry = pending.pop(op.mode, None)
            before = bombieri_norm(poly) if entry is None else entry.norm
            poly = fock_project(poly, var(op.mode), 0)
            live.remove(op.mode)
            after = bombieri_norm(poly)
            if entry is not None and entry.shift is not None:
                # coherent-state overlap |<0|beta>|^2
                after *= math.exp(-abs(entry.shift) ** 2 / 2)
            if entry is not None and entry.roots:
                after /= bombieri_norm(_root_polynomial(entry.roots))
            p = _prob_ratio(after, before)
            if p == 0 or poly.is_zero():
                raise ImpossibleOutcome(f"vacuum outcome on mode {op.mode} has zero probability")
            prob *= p
            steps.append((i, "vacuum", p))
            if normalize:
                poly = poly / bombieri_norm(poly)
        else:
            raise CircuitError(f"unknown operation {op!r}")
    if pending:
        raise CircuitError(f"modes {sorted(pending)} were displaced but never projected")
    if normalize and not poly.is_zero():
        poly = poly / bombieri_norm(poly)
    return SimState(poly, prob, normalize, tuple(live), tuple(steps))


def _root_polynomial(roots) -> StellarPolynomial:
    out = StellarPolynomial.constant(1.0, 1)
    for r in roots:
        out = out * StellarPolynomial.linear([1.0], -r)
    return out


def success_probability(circuit: Circuit, initial: StellarPolynomial | None = None) -> float:
    """Product of the post-selection probabilities along the circuit."""
    return execute(circuit, initial).accumulated_probability


def fidelity(a, b) -> float:
    """``|<a|b>|^2`` after normalizing; accepts states or stellar polynomials."""
    pa = state_to_polynomial(a) if isinstance(a, CoreState) else a
    pb = state_to_polynomial(b) if isinstance(b, CoreState) else b
    if pa.nvars != pb.nvars:
        raise ValueError("mode counts differ")
    na, nb = bombieri_norm(pa), bombieri_norm(pb)
    if na == 0 or nb == 0:
        raise ValueError("fidelity with the zero state")
    return min(1.0, abs(bombieri_inner(pa, pb)) ** 2 / (na * nb) ** 2)


# -- scale dependence ---------------------------------------------------------


def heralding_weights(poly: StellarPolynomial, mode: int) -> dict[int, float]:
    """Unnormalized weight ``|<n|_mode psi|^2`` of every photon number ``n``."""
    n = poly.exps[:, mode]
    w = np.abs(poly.coeffs) ** 2 * multi_factorial(poly.exps)
    out: dict[int, float] = {}
    for k, v in zip(n.tolist(), w):
        out[k] = out.get(k, 0.0) + float(v)
    return out


def graded_probability(grade_weights: dict[int, float], target: int, alpha: float) -> float:
    """Probability of grade ``target`` when grade ``s`` is scaled by ``alpha**s``.

    For seed forms ``lambda + alpha u.x`` the part with ``s`` photons outside
    the ancilla picks up ``alpha**s``, so one expansion at ``alpha = 1`` gives
    the whole curve.
    """
    if alpha <= 0:
        return 0.0
    grades = np.array(sorted(grade_weights))
    weights = np.array([grade_weights[g] for g in grades])
    if target not in grade_weights:
        return 0.0
    # work in logs so large alpha and high grades do not overflow
    logs = np.log(np.maximum(weights, 1e-300)) + 2 * grades * math.log(alpha)
    logs[weights <= 0] = -np.inf
    top = logs.max()
    return float(np.exp(logs[grades == target][0] - top) / np.exp(logs - top).sum())


_GOLDEN = (math.sqrt(5) - 1) / 2


def _golden_max(f, lo: float, hi: float, rtol: float):
    """Maximize ``f(exp(t))`` for ``t`` in ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    # an interval of width rtol in log scale is a relative tolerance on alpha
    while b - a > rtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(math.exp(d))
    t = (a + b) / 2
    return math.exp(t), f(math.exp(t))


def optimize_alpha(
    prob: Callable[[float], float], bracket: tuple[float, float] = (1e-2, 1e2), n_brackets: int = 8, rtol: float = 1e-4
) -> tuple[float, float]:
    """Scale maximizing ``prob`` via golden-section search on log-spaced sub-brackets."""
    lo, hi = bracket
    if not (0 < lo < hi) or n_brackets < 1:
        raise ValueError(f"degenerate bracket {bracket}")
    edges = np.linspace(math.log(lo), math.log(hi), n_brackets + 1)
    best = (lo, -math.inf)
    for a, b in zip(edges[:-1], edges[1:]):
        alpha, p = _golden_max(prob, a, b, rtol)
        if p > best[1]:
            best = (alpha, p)
    return best


def identity_probability(d: int, M: int, w) -> np.ndarray:
    """Closed-form heralding probability for the Waring model ``W = w I``."""
    w = np.asarray(w, dtype=float)
    fact = math.factorial
    num = fact(d * (M - 1)) * fact(d) * M * w ** (2 * d)
    den = sum(fact(d * (M - k)) * fact(d) ** k * math.comb(M, k) * w ** (2 * d * k) for k in range(M + 1))
    return num / den


# -- probability curves -------------------------------------------------------


@dataclass(frozen=True)
class ProbabilityCurve:
    samples: tuple

    @property
    def w(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def probability(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["w", "probability"])
        for w, p in self.samples:
            writer.writerow([repr(float(w)), repr(float(p))])
        return buf.getvalue()

    def write(self, path) -> None:
        write_atomic(path, self.to_csv())


def emit_probability_curve(prob: Callable[[float], float], w_grid: Iterable[float]) -> ProbabilityCurve:
    samples = []
    for w in w_grid:
        p = prob(float(w)) if w > 0 else 0.0
        samples.append((float(w), float(p)))
    return ProbabilityCurve(tuple(samples))


def write_atomic(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
