"""Exact preparation circuits for multimode multiphoton states.

A state with finitely many photons is identified with its stellar
polynomial.  Decomposing that polynomial (as a sum of powers of linear forms,
or as an elementary symmetric quadratic) yields a seed that can be built from
photon additions and interferometers; post-selecting an ancilla then leaves
the target exactly.
"""

__version__ = "0.1.0"

from .fock import (
    CoreState,
    StellarPolynomial,
    apply_annihilation,
    apply_creation,
    bombieri_norm,
    fock_project,
    homogenize,
    polynomial_to_state,
    shift_variable,
    specialize,
    state_to_polynomial,
    substitute_linear,
)
from .tensor import (
    AdamOptions,
    RankBounds,
    RankSearchError,
    SymmetricTensor,
    WaringModel,
    monomial_pair_rank,
    rank_bounds,
    rank_search,
    rank_search_all,
    waring_fit,
)
from .circuit import (
    Circuit,
    Displace,
    DisplacedSubtract,
    Interferometer,
    PhotonAdd,
    PNRProject,
    VacuumProject,
)
from .synthesis import (
    LinearForm,
    SynthesisReport,
    build_seed_forms,
    catalysis_lower_bound,
    forms_to_circuit,
    synthesize_e2,
    synthesize_ghz,
    synthesize_product,
    synthesize_waring,
)
from .simulator import (
    ImpossibleOutcome,
    SimState,
    emit_probability_curve,
    execute,
    fidelity,
    identity_probability,
    optimize_alpha,
    success_probability,
)
from .addition import approx_addition_beamsplitter, approx_addition_squeezer
from .states import builtin_state, ghz_state
