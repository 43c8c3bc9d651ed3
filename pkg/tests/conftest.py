import numpy as np
import pytest
from hypothesis import strategies as st

from stellarprep.fock import StellarPolynomial


@st.composite
def polynomials(draw, max_vars=3, max_degree=4, max_terms=6, homogeneous=False):
    nvars = draw(st.integers(1, max_vars))
    degree = draw(st.integers(0 if not homogeneous else 1, max_degree))
    n_terms = draw(st.integers(1, max_terms))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    terms = {}
    for _ in range(n_terms):
        if homogeneous:
            cuts = np.sort(rng.integers(0, degree + 1, size=nvars - 1))
            exps = np.diff(np.concatenate([[0], cuts, [degree]]))
        else:
            exps = rng.integers(0, degree + 1, size=nvars)
        terms[tuple(int(e) for e in exps)] = complex(rng.normal(), rng.normal())
    return StellarPolynomial.from_dict(terms, nvars)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


TABLE_STATES = ["psi1", "psi2", "psi3", "psi4", "psi5", "psi6", "psi7", "psi8", "psi9", "psi10", "r2", "r4", "r5", "k3"]


class WaringRun:
    """Rank search plus synthesis for one benchmark state."""

    def __init__(self, name):
        from stellarprep.fock import homogenize, state_to_polynomial
        from stellarprep.states import builtin_state
        from stellarprep.synthesis import synthesize_waring
        from stellarprep.tensor import rank_search_all

        self.name = name
        self.target = state_to_polynomial(builtin_state(name))
        work = self.target if self.target.is_homogeneous() else homogenize(self.target, 0)
        self.work = work / float(np.abs(work.coeffs).max())
        self.models = rank_search_all(self.work, restarts=25, seed=0)
        self.circuit, self.report = synthesize_waring(self.target, models=self.models)


@pytest.fixture(scope="session")
def waring_runs():
    return {name: WaringRun(name) for name in TABLE_STATES}
