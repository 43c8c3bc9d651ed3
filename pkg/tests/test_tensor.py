import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import polynomials
from stellarprep.fock import StellarPolynomial, bombieri_norm, homogenize, state_to_polynomial
from stellarprep.states import builtin_state
from stellarprep.tensor import (
    AdamOptions,
    RankSearchError,
    SymmetricTensor,
    power_sum,
    monomial_pair_rank,
    rank_bounds,
    rank_search,
    rank_search_all,
    waring_fit,
    waring_gradient,
    waring_loss,
)


def _homogeneous_target(name):
    p = state_to_polynomial(builtin_state(name))
    return p if p.is_homogeneous() else homogenize(p)


# -- symmetric tensor view -----------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(polynomials(homogeneous=True, max_degree=3), st.integers(0, 2**31 - 1))
def test_symmetric_tensor_evaluates_polynomial(p, seed):
    T = SymmetricTensor(p)
    dense = T.to_dense()
    for perm in [tuple(reversed(range(T.order)))]:
        assert np.allclose(dense, dense.transpose(perm))
    x = np.random.default_rng(seed).normal(size=p.nvars) + 0j
    assert T(x) == pytest.approx(p(x), abs=1e-12 * max(1.0, abs(p(x))))


def test_symmetric_tensor_entries():
    p = StellarPolynomial.from_dict({(2, 1): 3.0})
    T = SymmetricTensor(p)
    assert T[(0, 0, 1)] == pytest.approx(1.0)
    assert T[(0, 1, 0)] == pytest.approx(1.0)


# -- loss and gradient ---------------------------------------------------------


@pytest.mark.parametrize("M,d", [(3, 2), (3, 3), (4, 3)])
def test_gradient_matches_finite_differences(M, d):
    rng = np.random.default_rng(10 * M + d)
    r = 3
    h = 1e-5
    for _ in range(20):
        terms = {}
        for _ in range(6):
            cuts = np.sort(rng.integers(0, d + 1, size=M - 1))
            terms[tuple(np.diff(np.concatenate([[0], cuts, [d]])))] = complex(rng.normal(), rng.normal())
        target = StellarPolynomial.from_dict(terms, M)
        W = (rng.normal(size=(r, M)) + 1j * rng.normal(size=(r, M))) / math.sqrt(M)
        g = waring_gradient(target, W)
        num = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            for unit, part in ((1.0, "re"), (1j, "im")):
                E = np.zeros_like(W)
                E[idx] = unit * h
                diff = (waring_loss(target, W + E) - waring_loss(target, W - E)) / (2 * h)
                num[idx] += diff if part == "re" else 1j * diff
        assert np.linalg.norm(g - num) / np.linalg.norm(num) < 1e-5


def test_loss_equals_squared_bombieri_residual():
    rng = np.random.default_rng(2)
    target = _homogeneous_target("psi2")
    W = rng.normal(size=(3, target.nvars)) + 1j * rng.normal(size=(3, target.nvars))
    expected = bombieri_norm(target - power_sum(W, target.degree)) ** 2
    assert waring_loss(target, W) == pytest.approx(expected, rel=1e-10)


# -- fits ----------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4])
def test_single_power_is_rank_one(d):
    target = StellarPolynomial.from_dict({(d, 0, 0): 1.0})
    model = waring_fit(target, 1, seed=0)
    assert model.relative_residual < 1e-8
    w = model.W[0]
    assert abs(w[0] ** d - 1) < 1e-6 and np.allclose(w[1:], 0, atol=1e-6)


def test_monomial_x2y_has_rank_three():
    target = StellarPolynomial.from_dict({(2, 1): 1.0})
    assert rank_search(target, restarts=10).rank == 3
    fits = [waring_fit(target, 2, seed=s) for s in range(10)]
    assert min(f.relative_residual for f in fits) > 1e-6


def test_psi4_rank_four():
    target = _homogeneous_target("psi4")
    fits = [waring_fit(target, 4, seed=s) for s in range(5)]
    assert min(f.relative_residual for f in fits) < 1e-6


def test_reconstruction_identity():
    target = _homogeneous_target("r2")
    model = rank_search(target, restarts=5)
    recomputed = bombieri_norm(target - model.reconstruct())
    assert recomputed <= model.residual * (1 + 1e-9) + 1e-15


def test_scaling_covariance():
    rng = np.random.default_rng(5)
    W = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    for d in (2, 3):
        for a in (0.5, 1.7):
            lhs = power_sum(a * W, d)
            rhs = power_sum(W, d) * a**d
            assert (lhs - rhs).is_zero() or bombieri_norm(lhs - rhs) < 1e-12 * bombieri_norm(rhs)


def test_different_seeds_agree_in_reconstruction():
    target = _homogeneous_target("psi1")
    threshold = 1e-6
    models = rank_search_all(target, restarts=10, threshold=threshold)
    assert len(models) >= 2
    a, b = models[0], models[1]
    assert not np.allclose(a.W, b.W)
    diff = bombieri_norm(a.reconstruct() - b.reconstruct()) / bombieri_norm(target)
    assert diff < 2 * threshold


def test_rank_search_gives_up():
    target = _homogeneous_target("psi7")
    opts = AdamOptions(max_iter=50, polish=False)
    with pytest.raises(RankSearchError):
        rank_search(target, restarts=1, threshold=1e-30, opts=opts, start_rank=rank_bounds(3, 4).maximal_upper)


def test_rank_search_rejects_inhomogeneous():
    with pytest.raises(ValueError):
        rank_search(StellarPolynomial.from_dict({(0,): 1.0, (1,): 1.0}))


@pytest.mark.parametrize("name,rank", [("r2", 2), ("r5", 5), ("k3", 5)])
def test_rank_search_examples(name, rank):
    target = _homogeneous_target(name)
    model = rank_search(target, restarts=25)
    bounds = rank_bounds(target.nvars, target.degree)
    assert model.rank == rank <= bounds.maximal_upper


# -- bounds --------------------------------------------------------------------


@pytest.mark.parametrize(
    "M,d,generic,upper,exception",
    [(3, 3, 4, 5, False), (3, 5, 8, 10, True), (4, 3, 6, 7, True), (3, 4, 5, 7, False), (1, 5, 1, 1, False)],
)
def test_rank_bounds_examples(M, d, generic, upper, exception):
    b = rank_bounds(M, d)
    assert (b.generic, b.maximal_upper, b.is_AH_exception) == (generic, upper, exception)


@given(st.integers(1, 8), st.integers(1, 8))
def test_rank_bounds_invariants(M, d):
    b = rank_bounds(M, d)
    assert 1 <= b.generic <= b.maximal_upper <= 2 * b.generic
    if M == 3 and d > 2:
        assert b.maximal_upper <= (d * d + 6 * d + 1) // 4


def test_monomial_pair_rank():
    assert monomial_pair_rank(3) == 5
    assert monomial_pair_rank(1) == 2
    assert monomial_pair_rank(4) == 9
    assert 4 * (monomial_pair_rank(4) - 1) == 32
