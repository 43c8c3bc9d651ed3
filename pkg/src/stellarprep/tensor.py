"""Waring (symmetric tensor) decomposition of homogeneous polynomials.

A homogeneous polynomial ``T`` of degree ``d`` is approximated by
``sum_k (w_k . x)^d``.  The loss is the squared Bombieri distance, which is
the Fock-space distance between the corresponding unnormalized states.  Using
the reproducing property ``<(a.x)^d, (b.x)^d> = d! (conj(a).b)^d`` the loss
and its gradient only need point evaluations of ``T``:

    loss = |T|^2 - 2 d! Re sum_k T(conj(w_k)) + d! sum_kl (w_k . conj(w_l))^d
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .fock import StellarPolynomial, bombieri_norm, multi_factorial

__all__ = [
    "AdamOptions",
    "SymmetricTensor",
    "WaringModel",
    "RankBounds",
    "RankSearchError",
    "waring_fit",
    "fit_restarts",
    "rank_search",
    "rank_search_all",
    "rank_bounds",
    "monomial_pair_rank",
    "waring_loss",
    "waring_gradient",
    "power_sum",
]

logger = logging.getLogger(__name__)


class RankSearchError(RuntimeError):
    """No decomposition met the threshold up to the maximal rank."""


@dataclass(frozen=True)
class AdamOptions:
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_iter: int = 5000
    # stop once the relative loss improved by less than this over `patience` steps
    stall_tol: float = 1e-12
    patience: int = 200
    # Levenberg-Marquardt refinement of the Adam result
    polish: bool = True
    polish_iter: int = 200
    # reject decompositions whose terms cancel by more than this factor
    max_cancellation: float = 1e3


# -- symmetric tensors --------------------------------------------------------


class SymmetricTensor:
    """Symmetric tensor view of a homogeneous polynomial.

    The entry at a sorted index tuple ``i_1 <= ... <= i_d`` is the monomial
    coefficient divided by the multinomial ``d! / n!``, where ``n`` counts the
    repetitions, so that ``P(x) = sum_{i_1..i_d} T[i] x_{i_1} ... x_{i_d}``.
    """

    def __init__(self, poly: StellarPolynomial):
        if not poly.is_homogeneous():
            raise ValueError("symmetric tensors need a homogeneous polynomial")
        self.poly = poly
        self.order = poly.degree
        self.dim = poly.nvars

    def __getitem__(self, index) -> complex:
        counts = np.bincount(np.asarray(index, dtype=int), minlength=self.dim)
        if counts.sum() != self.order:
            raise IndexError("index tuple has the wrong order")
        mult = math.factorial(self.order) / multi_factorial(counts)
        return self.poly[tuple(counts)] / mult

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim,) * self.order, dtype=complex)
        for idx in combinations_with_replacement(range(self.dim), self.order):
            val = self[idx]
            if val != 0:
                for perm in set(_permutations(idx)):
                    out[perm] = val
        return out

    def unfolding(self) -> np.ndarray:
        """First-index flattening, shape ``(dim, dim**(order-1))``."""
        return self.to_dense().reshape(self.dim, -1)

    def __call__(self, x) -> complex:
        x = np.asarray(x, dtype=complex)
        t = self.to_dense()
        for _ in range(self.order):
            t = t @ x
        return complex(t)


def _permutations(idx):
    from itertools import permutations

    return permutations(idx)


# -- models -------------------------------------------------------------------


def power_sum(W, degree: int) -> StellarPolynomial:
    """``sum_k (w_k . x)^degree`` expanded with exact polynomial arithmetic."""
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    out = StellarPolynomial(W.shape[1])
    for w in W:
        out = out + StellarPolynomial.linear(w) ** degree
    return out


@dataclass(frozen=True)
class WaringModel:
    """Rows of ``W`` are the linear forms of ``sum_k (w_k . x)^d``."""

    W: np.ndarray
    degree: int
    residual: float
    target_norm: float = 1.0
    seed: int | None = None
    scale: float = 1.0
    iterations: int = 0
    probability: float | None = field(default=None, compare=False)

    @property
    def rank(self) -> int:
        return self.W.shape[0]

    @property
    def nvars(self) -> int:
        return self.W.shape[1]

    @property
    def relative_residual(self) -> float:
        return self.residual / self.target_norm if self.target_norm else self.residual

    @property
    def scaled_W(self) -> np.ndarray:
        return self.scale * self.W

    def reconstruct(self) -> StellarPolynomial:
        return power_sum(self.W, self.degree)

    def cancellation(self) -> float:
        """``sum_k |(w_k . x)^d| / |sum_k (w_k . x)^d|`` in Bombieri norm."""
        term_norms = math.sqrt(math.factorial(self.degree)) * np.linalg.norm(self.W, axis=1) ** self.degree
        return float(term_norms.sum() / self.target_norm) if self.target_norm else math.inf

    def with_scale(self, scale: float) -> "WaringModel":
        return replace(self, scale=float(scale))


# -- loss and gradient --------------------------------------------------------


class _Target:
    """Homogeneous target prepared for fast batched evaluation."""

    def __init__(self, poly: StellarPolynomial):
        if not poly.is_homogeneous() or poly.is_zero():
            raise ValueError("Waring decomposition needs a nonzero homogeneous polynomial")
        self.poly = poly
        self.degree = poly.degree
        self.nvars = poly.nvars
        self.exps = poly.exps
        self.coeffs = poly.coeffs
        self.dfact = math.factorial(self.degree)
        self.norm2 = bombieri_norm(poly) ** 2
        # full monomial basis for the explicit residual
        basis = [
            np.bincount(np.array(idx, dtype=int), minlength=self.nvars)
            for idx in combinations_with_replacement(range(self.nvars), self.degree)
        ]
        self.basis = np.array(basis, dtype=np.int64).reshape(-1, self.nvars)
        self.basis_fact = multi_factorial(self.basis)
        lookup = poly.as_dict()
        self.basis_coeffs = np.array([lookup.get(tuple(int(v) for v in row), 0j) for row in self.basis])

    def _factors(self, P, exps):
        """Per-variable power factors ``P[..., i] ** exps[:, i]`` for all i."""
        pw = P[..., None] ** np.arange(self.degree + 1)  # (..., M, d+1)
        return [pw[..., i, :][..., exps[:, i]] for i in range(self.nvars)], pw

    def evaluate(self, P):
        factors, _ = self._factors(P, self.exps)
        return np.prod(np.stack(factors), axis=0) @ self.coeffs

    def evaluate_with_gradient(self, P):
        factors, pw = self._factors(P, self.exps)
        stack = np.stack(factors)  # (M, ..., t)
        value = np.prod(stack, axis=0) @ self.coeffs
        grads = []
        for i in range(self.nvars):
            e = self.exps[:, i]
            dfac = e * pw[..., i, :][..., np.maximum(e - 1, 0)]
            others = np.prod(np.delete(stack, i, axis=0), axis=0) if self.nvars > 1 else 1.0
            grads.append((dfac * others) @ self.coeffs)
        return value, np.stack(grads, axis=-1)

    def loss_and_grad(self, W):
        """Batched loss and real gradient ``2 dloss/dconj(W)``; W has shape (B, r, M)."""
        d, dfact = self.degree, self.dfact
        Wc = np.conj(W)
        tval, tgrad = self.evaluate_with_gradient(Wc)
        G = np.einsum("bki,bli->bkl", W, Wc)
        Gd1 = G ** (d - 1)
        cross = np.sum(tval, axis=1)
        loss = self.norm2 - 2 * dfact * cross.real + dfact * np.sum(Gd1 * G, axis=(1, 2)).real
        grad_conj = -dfact * tgrad + dfact * d * np.einsum("bkm,bki->bmi", Gd1, W)
        return loss, 2 * grad_conj

    def residual_vector(self, W):
        """Explicit coefficient residual weighted by sqrt(n!), and its Jacobian."""
        d, dfact = self.degree, self.dfact
        E = self.basis
        mult = dfact / self.basis_fact
        pw = W[..., None] ** np.arange(d + 1)  # (r, M, d+1)
        F = np.stack([pw[:, i, E[:, i]] for i in range(self.nvars)])  # (M, r, nb)
        mono = np.prod(F, axis=0)  # (r, nb)
        weight = np.sqrt(self.basis_fact)
        res = weight * (self.basis_coeffs - mult * mono.sum(axis=0))
        J = np.zeros((len(E), W.shape[0], self.nvars), dtype=complex)
        for i in range(self.nvars):
            e = E[:, i]
            dfac = e * pw[:, i, np.maximum(e - 1, 0)]
            others = np.prod(np.delete(F, i, axis=0), axis=0) if self.nvars > 1 else 1.0
            J[:, :, i] = (-(weight * mult) * (dfac * others)).T
        return res, J.reshape(len(E), -1)


def waring_loss(target: StellarPolynomial, W) -> float:
    """Squared Bombieri distance between ``target`` and ``sum_k (w_k . x)^d``."""
    tgt = _Target(target)
    loss, _ = tgt.loss_and_grad(np.asarray(W, dtype=complex)[None])
    return float(loss[0])


def waring_gradient(target: StellarPolynomial, W) -> np.ndarray:
    """Real gradient of :func:`waring_loss`: ``d/dRe W + 1j d/dIm W``."""
    tgt = _Target(target)
    _, grad = tgt.loss_and_grad(np.asarray(W, dtype=complex)[None])
    return grad[0]


# -- optimization -------------------------------------------------------------


def _initial_points(rank: int, nvars: int, seeds: Sequence[int]) -> np.ndarray:
    std = 1.0 / math.sqrt(nvars)
    out = np.empty((len(seeds), rank, nvars), dtype=complex)
    for b, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        out[b] = rng.normal(scale=std / math.sqrt(2), size=(rank, nvars)) + 1j * rng.normal(
            scale=std / math.sqrt(2), size=(rank, nvars)
        )
    return out


def _adam(tgt: _Target, W: np.ndarray, opts: AdamOptions, stop_loss: float):
    """Batched Adam on real and imaginary parts independently."""
    m = np.zeros_like(W)
    v_re = np.zeros(W.shape)
    v_im = np.zeros(W.shape)
    best = np.full(len(W), np.inf)
    best_W = W.copy()
    history = np.full((len(W), opts.patience), np.inf)
    active = np.ones(len(W), dtype=bool)
    it = 0
    for it in range(1, opts.max_iter + 1):
        loss, g = tgt.loss_and_grad(W)
        if not np.all(np.isfinite(loss)):
            bad = np.flatnonzero(~np.isfinite(loss))
            raise FloatingPointError(f"non-finite loss in restarts {bad.tolist()} at iteration {it}")
        rel = loss / tgt.norm2
        improved = rel < best
        best = np.where(improved, rel, best)
        best_W[improved] = W[improved]
        slot = it % opts.patience
        stalled = (history[:, slot] - best) < opts.stall_tol
        history[:, slot] = best
        active &= ~(stalled & (it > opts.patience)) & (best > stop_loss)
        if not active.any():
            break
        g = np.where(active[:, None, None], g, 0)
        m = opts.beta1 * m + (1 - opts.beta1) * g
        v_re = opts.beta2 * v_re + (1 - opts.beta2) * g.real**2
        v_im = opts.beta2 * v_im + (1 - opts.beta2) * g.imag**2
        bc1 = 1 - opts.beta1**it
        bc2 = 1 - opts.beta2**it
        step_re = m.real / bc1 / (np.sqrt(v_re / bc2) + opts.eps)
        step_im = m.imag / bc1 / (np.sqrt(v_im / bc2) + opts.eps)
        W = W - opts.lr * (step_re + 1j * step_im) * active[:, None, None]
    return best_W, best, it


def _levenberg_marquardt(tgt: _Target, W: np.ndarray, iters: int, rel_tol: float):
    """Damped Gauss-Newton on the explicit residual; returns (W, |res|^2)."""
    r, M = W.shape
    res, J = tgt.residual_vector(W)
    cost = float(np.vdot(res, res).real)
    mu = 1e-3
    target_cost = (rel_tol**2) * tgt.norm2 * 1e-4
    for _ in range(iters):
        if cost <= target_cost:
            break
        # real formulation of the holomorphic residual
        Jr = np.block([[J.real, -J.imag], [J.imag, J.real]])
        rr = np.concatenate([res.real, res.imag])
        JtJ = Jr.T @ Jr
        Jtr = Jr.T @ rr
        accepted = False
        for _ in range(20):
            A = JtJ + mu * (np.diag(np.diag(JtJ)) + 1e-12 * np.eye(len(JtJ)))
            try:
                step = np.linalg.solve(A, -Jtr)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            trial = W + (step[: r * M] + 1j * step[r * M :]).reshape(r, M)
            tres, tJ = tgt.residual_vector(trial)
            tcost = float(np.vdot(tres, tres).real)
            if np.isfinite(tcost) and tcost < cost:
                W, res, J, cost = trial, tres, tJ, tcost
                mu = max(mu / 3, 1e-15)
                accepted = True
                break
            mu *= 4
        if not accepted:
            break
    return W, cost


def _finish(tgt: _Target, W: np.ndarray, seed: int, iterations: int, opts: AdamOptions, threshold: float):
    if opts.polish:
        W, _ = _levenberg_marquardt(tgt, W, opts.polish_iter, threshold)
    # residual recomputed from exact coefficients, independent of the loss formula
    residual = bombieri_norm(tgt.poly - power_sum(W, tgt.degree))
    return WaringModel(
        W=W, degree=tgt.degree, residual=residual, target_norm=math.sqrt(tgt.norm2), seed=seed, iterations=iterations
    )


def fit_restarts(
    target: StellarPolynomial,
    rank: int,
    seeds: Sequence[int],
    opts: AdamOptions = AdamOptions(),
    threshold: float = 1e-6,
) -> list[WaringModel]:
    """Run one Waring fit per seed (batched) and return the models in seed order."""
    if rank < 1:
        raise ValueError("rank must be positive")
    tgt = _Target(target)
    # optimize a copy scaled so that unit-norm linear forms are the natural size
    internal = math.sqrt(rank * tgt.dfact)
    factor = internal / math.sqrt(tgt.norm2)
    scaled = _Target(target * factor)
    W0 = _initial_points(rank, tgt.nvars, seeds)
    stop = (threshold * 1e-2) ** 2
    W, _, iters = _adam(scaled, W0, opts, stop)
    out = []
    back = factor ** (-1.0 / tgt.degree)
    for b, s in enumerate(seeds):
        model = _finish(scaled, W[b], s, iters, opts, threshold)
        out.append(replace(model, W=model.W * back, residual=model.residual / factor, target_norm=math.sqrt(tgt.norm2)))
    return out


def waring_fit(
    target: StellarPolynomial, rank: int, seed: int = 0, opts: AdamOptions = AdamOptions(), threshold: float = 1e-6
) -> WaringModel:
    """Best local Waring decomposition of rank ``rank`` from one random start."""
    return fit_restarts(target, rank, [seed], opts, threshold)[0]


def _accepted(model: WaringModel, threshold: float, opts: AdamOptions) -> bool:
    return model.relative_residual < threshold and model.cancellation() <= opts.max_cancellation


def rank_search_all(
    target: StellarPolynomial,
    restarts: int = 25,
    threshold: float = 1e-6,
    seed: int = 0,
    opts: AdamOptions = AdamOptions(),
    start_rank: int = 1,
) -> list[WaringModel]:
    """All successful restarts at the smallest rank where any restart succeeds.

    Restart ``i`` uses seed ``seed + i``.  Raises :class:`RankSearchError`
    past the known maximal rank.
    """
    if not target.is_homogeneous():
        raise ValueError("rank search needs a homogeneous polynomial")
    bounds = rank_bounds(target.nvars, target.degree)
    seeds = [seed + i for i in range(restarts)]
    for r in range(max(1, start_rank), bounds.maximal_upper + 1):
        models = fit_restarts(target, r, seeds, opts, threshold)
        good = [m for m in models if _accepted(m, threshold, opts)]
        best = min(m.relative_residual for m in models)
        logger.info("rank %d: %d/%d restarts below threshold (best %.2e)", r, len(good), restarts, best)
        if good:
            return sorted(good, key=lambda m: (m.residual, m.seed))
    raise RankSearchError(f"no decomposition below {threshold:g} up to rank {bounds.maximal_upper}")


def rank_search(
    target: StellarPolynomial,
    restarts: int = 25,
    threshold: float = 1e-6,
    seed: int = 0,
    opts: AdamOptions = AdamOptions(),
    start_rank: int = 1,
    score: Callable[[WaringModel], float] | None = None,
) -> WaringModel:
    """Smallest-rank decomposition; ties broken by ``score`` (higher wins) or residual."""
    models = rank_search_all(target, restarts, threshold, seed, opts, start_rank)
    if score is None:
        return models[0]
    return max(models, key=lambda m: (score(m), -m.residual))


# -- rank bounds --------------------------------------------------------------

_AH_EXCEPTIONS = {(3, 5), (4, 3), (4, 4), (4, 5)}
# known maximal ranks, keyed by (M, d)
_MAXIMAL_RANK = {(3, 3): 5, (3, 4): 7, (3, 5): 10, (4, 3): 7}


@dataclass(frozen=True)
class RankBounds:
    generic: int
    maximal_upper: int
    is_AH_exception: bool


def rank_bounds(M: int, d: int) -> RankBounds:
    """Generic Waring rank and an upper bound on the maximal rank for ``S^d(C^M)``."""
    if M < 1 or d < 1:
        raise ValueError("M and d must be positive")
    if d == 1 or M == 1:
        return RankBounds(1, 1, False)
    if d == 2:
        # quadratic forms: rank equals matrix rank, generically full
        return RankBounds(M, M, False)
    generic = -(-math.comb(M + d - 1, d) // M)
    exception = (M, d) in _AH_EXCEPTIONS
    generic += exception
    upper = 2 * generic
    if M == 2:
        upper = min(upper, d)
    if M == 3:
        upper = min(upper, (d * d + 6 * d + 1) // 4)
    upper = min(upper, _MAXIMAL_RANK.get((M, d), upper))
    return RankBounds(generic, upper, exception)


def monomial_pair_rank(M: int) -> int:
    """Waring rank of ``y^M + x_1 ... x_M`` (two monomials in disjoint variables)."""
    if M < 1:
        raise ValueError("M must be positive")
    return 1 + 2 ** (M - 1)
