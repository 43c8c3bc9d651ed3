import math

import numpy as np
import pytest

from conftest import TABLE_STATES, random_unitary
from oracle import DenseSimulator
from stellarprep.circuit import DisplacedSubtract, Interferometer, PhotonAdd, PNRProject
from stellarprep.fock import CoreState, StellarPolynomial, state_to_polynomial, substitute_linear
from stellarprep.simulator import execute, fidelity
from stellarprep.states import builtin_state, ghz_state, random_two_photon_state
from stellarprep.synthesis import (
    LinearForm,
    SynthesisError,
    build_seed_forms,
    catalysis_lower_bound,
    e2_decomposition,
    e2_matrix,
    expand_forms,
    forms_to_circuit,
    ghz_roots,
    quadratic_form_matrix,
    synthesize_e2,
    synthesize_ghz,
    synthesize_product,
)


def _seed_product(W, d, alpha):
    """``prod_k (lambda^d + alpha^d (w_k . x)^d)`` built factor by factor."""
    W = np.atleast_2d(W)
    n = W.shape[1] + 1
    lam = StellarPolynomial.variable(0, n) ** d
    out = StellarPolynomial.constant(1.0, n)
    for w in W:
        lin = StellarPolynomial.linear(np.concatenate([[0.0], w]))
        out = out * (lam + lin**d * alpha**d)
    return out


# -- seed forms ----------------------------------------------------------------


def test_seed_forms_single_row():
    forms = build_seed_forms([[1.0]], 2)
    assert np.allclose(forms[0].coefficients, [1, -1j])
    assert np.allclose(forms[1].coefficients, [1, 1j])
    assert expand_forms(forms).allclose(StellarPolynomial.from_dict({(2, 0): 1.0, (0, 2): 1.0}))


def test_seed_forms_identity_model():
    w = 1.3
    seed = expand_forms(build_seed_forms(w * np.eye(4), 2))
    for j in range(4):
        e = [6, 0, 0, 0, 0]
        e[j + 1] = 2
        assert seed[tuple(e)] == pytest.approx(w**2)
    assert seed[(8, 0, 0, 0, 0)] == pytest.approx(1.0)


@pytest.mark.parametrize("M,d,r", [(1, 2, 1), (2, 3, 2), (3, 2, 3), (4, 3, 2), (3, 3, 4), (4, 2, 4)])
def test_seed_forms_expand_to_product(M, d, r):
    rng = np.random.default_rng(M * 100 + d * 10 + r)
    W = rng.normal(size=(r, M)) + 1j * rng.normal(size=(r, M))
    alpha = 0.8
    got = expand_forms(build_seed_forms(W, d, alpha))
    ref = _seed_product(W, d, alpha)
    assert len(build_seed_forms(W, d, alpha)) == r * d
    assert (got - ref).is_zero() or np.abs((got - ref).coeffs).max() < 1e-10 * np.abs(ref.coeffs).max()
    x = rng.normal(size=M + 1)
    assert got(x) == pytest.approx(ref(x), rel=1e-10)


# -- forms to circuit ----------------------------------------------------------


def test_single_basis_form():
    c = forms_to_circuit([LinearForm([1.0, 0.0, 0.0])])
    assert isinstance(c.ops[0], PhotonAdd)
    assert np.allclose(c.ops[1].matrix, np.eye(3))


def test_two_basis_forms_give_11():
    c = forms_to_circuit([LinearForm([1.0, 0.0]), LinearForm([0.0, 1.0])])
    state = execute(c).state
    assert state.as_dict() == pytest.approx({(1, 1): 1.0})


def test_forms_to_circuit_random_against_product():
    rng = np.random.default_rng(4)
    for n, k in [(2, 2), (3, 3), (4, 4), (3, 5)]:
        forms = [LinearForm(rng.normal(size=n) + 1j * rng.normal(size=n)) for _ in range(k)]
        out = execute(forms_to_circuit(forms))
        assert fidelity(out.polynomial, expand_forms(forms)) > 1 - 1e-12


def test_forms_to_circuit_against_dense_oracle():
    rng = np.random.default_rng(9)
    forms = [LinearForm(rng.normal(size=3) + 1j * rng.normal(size=3)) for _ in range(3)]
    terms, _ = DenseSimulator(3, 3).run(forms_to_circuit(forms))
    assert fidelity(CoreState.from_dict(terms, 3), expand_forms(forms)) > 1 - 1e-12


def test_forms_to_circuit_sparse_forms():
    forms = [LinearForm([0, 1, 0]), LinearForm([0, 1, 1]), LinearForm([0, 0, 1j]), LinearForm([1, 0, 0])]
    out = execute(forms_to_circuit(forms))
    assert fidelity(out.polynomial, expand_forms(forms)) > 1 - 1e-12


def test_forms_to_circuit_errors():
    with pytest.raises(SynthesisError):
        LinearForm([0, 0])
    with pytest.raises(SynthesisError):
        forms_to_circuit([])
    with pytest.raises(SynthesisError):
        forms_to_circuit([LinearForm([1, 0]), LinearForm([1, 0, 0])])


def test_table_seed_forms_round_trip(waring_runs):
    for name in TABLE_STATES:
        run = waring_runs[name]
        forms = build_seed_forms(run.models[0].W, run.work.degree, run.report.alpha)
        out = execute(forms_to_circuit(forms))
        assert fidelity(out.polynomial, expand_forms(forms)) > 1 - 1e-9, name


# -- Waring route ----------------------------------------------------------------


@pytest.mark.parametrize("name,adds,pnr", [("psi4", 8, 6), ("psi7", 24, 20), ("psi2", 9, 6)])
def test_waring_examples(waring_runs, name, adds, pnr):
    rep = waring_runs[name].report
    assert (rep.additions, rep.pnr_order) == (adds, pnr)
    assert rep.fidelity > 1 - 1e-9
    if name == "psi2":
        assert rep.success_probability == pytest.approx(0.17, abs=0.01)


def test_waring_never_beats_catalysis_bound(waring_runs):
    for name in TABLE_STATES:
        run = waring_runs[name]
        if run.target.is_homogeneous():
            assert run.report.additions >= catalysis_lower_bound(run.target)


def test_alpha_scaling_changes_only_probability():
    rng = np.random.default_rng(1)
    W = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    d = 2
    outs = []
    for alpha in (0.6, 1.4):
        c = forms_to_circuit(build_seed_forms(W, d, alpha)).append(PNRProject(0, d))
        outs.append(execute(c))
    assert fidelity(outs[0].polynomial, outs[1].polynomial) > 1 - 1e-10
    assert abs(outs[0].accumulated_probability - outs[1].accumulated_probability) > 1e-3


# -- quadratic route -------------------------------------------------------------


@pytest.mark.parametrize("M", [3, 4, 5, 6])
def test_e2_decomposition_identity(M):
    rng = np.random.default_rng(M)
    A_full = None
    for _ in range(100):
        B = quadratic_form_matrix(state_to_polynomial(random_two_photon_state(M, rng)))
        W = e2_decomposition(B)
        A_full = e2_matrix(len(W))
        assert np.allclose(W.T @ A_full @ W, B, atol=1e-10)


def test_e2_reduced_rank():
    # (x0 + x1)^2 + x2^2 has rank 2 over three modes
    p = StellarPolynomial.linear([1, 1, 0]) ** 2 + StellarPolynomial.variable(2, 3) ** 2
    W = e2_decomposition(quadratic_form_matrix(p))
    assert W.shape == (2, 3)
    circuit, rep = synthesize_e2(p)
    assert (rep.additions, rep.pnr_order) == (2, 0)
    assert rep.fidelity > 1 - 1e-9


def test_e2_rejects_bad_targets():
    with pytest.raises(SynthesisError):
        synthesize_e2(builtin_state("psi2"))
    with pytest.raises(SynthesisError):
        synthesize_e2(StellarPolynomial.from_dict({(2, 0): 1.0}))


@pytest.mark.parametrize("name,adds,pnr", [("psi1", 3, 1), ("psi4", 4, 2), ("psi6", 3, 1), ("psi8", 4, 2)])
def test_e2_resources_and_exactness(name, adds, pnr):
    circuit, rep = synthesize_e2(builtin_state(name))
    assert (rep.additions, rep.pnr_order) == (adds, pnr)
    assert rep.fidelity > 1 - 1e-9
    assert execute(circuit).accumulated_probability == pytest.approx(rep.total_probability)


def test_e2_inhomogeneous_target():
    target = CoreState.from_dict({(0, 0): 1.0, (1, 1): 1.0, (2, 0): 0.5}).normalized()
    circuit, rep = synthesize_e2(target)
    assert rep.ancilla_count == 2 and rep.fidelity > 1 - 1e-9


def test_e2_circuit_against_dense_oracle():
    circuit, rep = synthesize_e2(builtin_state("psi1"))
    terms, p = DenseSimulator(circuit.total_modes, 3).run(circuit)
    assert fidelity(CoreState.from_dict(terms, 3), builtin_state("psi1")) > 1 - 1e-9
    assert p == pytest.approx(rep.success_probability, abs=1e-9)


# -- GHZ ---------------------------------------------------------------------------


def test_ghz_roots_m2():
    roots = ghz_roots(2)
    assert np.allclose(sorted(roots, key=lambda z: z.imag), [-1j * math.sqrt(2), 1j * math.sqrt(2)])
    for M in (2, 3, 4):
        for r in ghz_roots(M):
            assert abs(r**M + math.factorial(M)) < 1e-9


@pytest.mark.parametrize("M", [2, 3, 4])
def test_ghz_route(M):
    circuit, rep = synthesize_ghz(M)
    assert rep.fidelity > 1 - 1e-9
    assert rep.additions == M and rep.subtractions == M
    assert circuit.count(DisplacedSubtract) == M


@pytest.mark.parametrize("M", [2, 3])
def test_ghz_against_dense_oracle(M):
    circuit, rep = synthesize_ghz(M)
    terms, p = DenseSimulator(circuit.total_modes, M).run(circuit)
    assert fidelity(CoreState.from_dict(terms, M), ghz_state(M)) > 1 - 1e-9
    assert p == pytest.approx(rep.success_probability, abs=1e-9)


# -- products and bounds -----------------------------------------------------------


def test_product_route_examples():
    _, rep = synthesize_product([[1, 0], [0, 1]])
    assert rep.additions == 2 and rep.pnr_order == 0 and rep.fidelity > 1 - 1e-12
    s = 1 / math.sqrt(2)
    circuit, rep = synthesize_product([[s, s], [s, s]])
    expected = CoreState.from_dict({(2, 0): 0.5, (1, 1): s, (0, 2): 0.5})
    assert fidelity(execute(circuit).state, expected) > 1 - 1e-12
    assert circuit.count(Interferometer) == 2 and rep.ancilla_count == 0


def test_catalysis_lower_bound_examples():
    assert catalysis_lower_bound(builtin_state("psi4")) == 4
    assert catalysis_lower_bound(builtin_state("psi6")) == 3
    for d in (2, 3, 5):
        assert catalysis_lower_bound(StellarPolynomial.from_dict({(d, 0): 1.0})) == d


def test_catalysis_bound_is_basis_independent():
    p = state_to_polynomial(builtin_state("psi1"))
    U = random_unitary(3, np.random.default_rng(0))
    assert catalysis_lower_bound(substitute_linear(p, U)) == catalysis_lower_bound(p) == 3
