"""Core states and their stellar polynomials.

A core state ``sum_n psi_n |n>`` is stored as a sparse map from occupation
multi-indices to amplitudes.  Its stellar polynomial has coefficients
``p_n = psi_n / sqrt(n!)`` so that ``|psi> = P(a^dagger)|0>``.  Both objects
share the same storage layout: an integer array of exponent rows and a complex
coefficient vector, kept in canonical form (duplicates merged, near-zero
entries pruned, graded-lexicographic order).
"""
from __future__ import annotations

import json
import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg
import scipy.special

__all__ = [
    "PRUNE_TOL",
    "CoreState",
    "StellarPolynomial",
    "multi_factorial",
    "state_to_polynomial",
    "polynomial_to_state",
    "apply_creation",
    "apply_annihilation",
    "fock_project",
    "substitute_linear",
    "homogenize",
    "specialize",
    "shift_variable",
    "bombieri_norm",
    "bombieri_inner",
]

PRUNE_TOL = 1e-14
_MAX_FACTORIAL = 170


@lru_cache(maxsize=None)
def _factorial_table() -> np.ndarray:
    # exact integers converted once; float64 holds n! up to 170
    return np.array([float(math.factorial(n)) for n in range(_MAX_FACTORIAL + 1)])


def multi_factorial(exps: np.ndarray) -> np.ndarray:
    """Row-wise ``n! = n_1! n_2! ... n_M!`` for an integer array of exponents."""
    exps = np.asarray(exps, dtype=np.int64)
    if exps.size and exps.max() > _MAX_FACTORIAL:
        raise OverflowError("occupation number too large for float factorials")
    table = _factorial_table()
    if exps.ndim == 1:
        return np.prod(table[exps])
    return np.prod(table[exps], axis=1)


def _canonical(exps: np.ndarray, coeffs: np.ndarray, tol: float, weighted: bool = False) -> tuple[np.ndarray, np.ndarray]:
    nvars = exps.shape[1]
    if len(coeffs) == 0:
        return np.zeros((0, nvars), dtype=np.int64), np.zeros(0, dtype=complex)
    if nvars == 0:
        total = coeffs.sum()
        if abs(total) <= tol:
            return np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=complex)
        return np.zeros((1, 0), dtype=np.int64), np.array([total], dtype=complex)
    base = int(exps.max()) + 1
    if base ** nvars < 2**62:
        weights = base ** np.arange(nvars, dtype=np.int64)
        keys = exps @ weights
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        merged = np.zeros(len(uniq), dtype=complex)
        np.add.at(merged, inverse, coeffs)
        exps = exps[first]
    else:
        exps, inverse = np.unique(exps, axis=0, return_inverse=True)
        merged = np.zeros(len(exps), dtype=complex)
        np.add.at(merged, inverse.ravel(), coeffs)
    size = np.abs(merged)
    if weighted:
        # compare state amplitudes |p_n| sqrt(n!), not raw coefficients
        size = size * np.exp(0.5 * scipy.special.gammaln(exps + 1.0).sum(axis=1))
    keep = size > tol
    exps, merged = exps[keep], merged[keep]
    # graded lexicographic: total degree first, then exponents of x_0, x_1, ...
    order = np.lexsort(tuple(-exps[:, j] for j in range(nvars - 1, -1, -1)) + (exps.sum(axis=1),))
    return exps[order], merged[order]


class _SparseTerms:
    """Immutable sparse map ``multi-index -> complex``."""

    _key = "n"
    _weighted_prune = False

    def __init__(self, nvars: int, exps=None, coeffs=None, *, tol: float = PRUNE_TOL):
        if nvars < 0:
            raise ValueError("number of modes must be non-negative")
        if exps is None:
            exps = np.zeros((0, nvars), dtype=np.int64)
            coeffs = np.zeros(0, dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex).ravel()
        exps = np.asarray(exps, dtype=np.int64).reshape(len(coeffs), nvars)
        if len(exps) != len(coeffs):
            raise ValueError("exponent rows and coefficients differ in length")
        if exps.size and exps.min() < 0:
            raise ValueError("occupations must be non-negative")
        exps, coeffs = _canonical(exps, coeffs, tol, self._weighted_prune)
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        self._nvars = int(nvars)
        self._exps = exps
        self._coeffs = coeffs

    @classmethod
    def from_dict(cls, terms: Mapping[Iterable[int], complex], nvars: int | None = None):
        items = list(terms.items())
        if nvars is None:
            if not items:
                raise ValueError("cannot infer the number of modes from an empty map")
            nvars = len(tuple(items[0][0]))
        exps = np.array([tuple(k) for k, _ in items], dtype=np.int64).reshape(len(items), nvars)
        if any(len(tuple(k)) != nvars for k, _ in items):
            raise ValueError("all multi-indices must have the same length")
        coeffs = np.array([v for _, v in items], dtype=complex)
        return cls(nvars, exps, coeffs)

    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def exps(self) -> np.ndarray:
        return self._exps

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self.as_dict().items())

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in row): complex(c) for row, c in zip(self._exps, self._coeffs)}

    def __getitem__(self, index) -> complex:
        index = np.asarray(tuple(index), dtype=np.int64)
        hit = np.flatnonzero(np.all(self._exps == index, axis=1))
        return complex(self._coeffs[hit[0]]) if len(hit) else 0j

    def _new(self, exps, coeffs, nvars=None):
        return type(self)(self._nvars if nvars is None else nvars, exps, coeffs)

    def __eq__(self, other):
        if type(self) is not type(other) or self._nvars != other._nvars:
            return NotImplemented
        return (
            self._exps.shape == other._exps.shape
            and np.array_equal(self._exps, other._exps)
            and np.array_equal(self._coeffs, other._coeffs)
        )

    __hash__ = None

    def allclose(self, other, atol: float = 1e-12) -> bool:
        if self._nvars != other.nvars:
            return False
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def __add__(self, other):
        if not isinstance(other, _SparseTerms):
            return NotImplemented
        if other.nvars != self._nvars:
            raise ValueError("mode counts differ")
        return self._new(np.vstack([self._exps, other.exps]), np.concatenate([self._coeffs, other.coeffs]))

    def __neg__(self):
        return self._new(self._exps, -self._coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, _SparseTerms):
            return NotImplemented
        return self._new(self._exps, self._coeffs * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def _to_json_dict(self) -> dict:
        terms = [
            {self._key: [int(v) for v in row], "re": float(c.real), "im": float(c.imag)}
            for row, c in zip(self._exps, self._coeffs)
        ]
        return {"modes": self._nvars, "terms": terms}

    def to_json(self, **kwargs) -> str:
        # repr(float) is the shortest string that round-trips exactly
        return json.dumps(self._to_json_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, (str, bytes)) else text
        nvars = int(data["modes"])
        terms = data["terms"]
        exps = np.array([t[cls._key] for t in terms], dtype=np.int64).reshape(-1, nvars)
        coeffs = np.array([complex(t.get("re", 0.0), t.get("im", 0.0)) for t in terms], dtype=complex)
        return cls(nvars, exps, coeffs, tol=0.0)


class CoreState(_SparseTerms):
    """A finite superposition of multimode Fock states."""

    _key = "n"

    @property
    def modes(self) -> int:
        return self._nvars

    @property
    def amplitudes(self) -> np.ndarray:
        return self._coeffs

    @property
    def photon_numbers(self) -> np.ndarray:
        return self._exps.sum(axis=1)

    def norm(self) -> float:
        return float(np.linalg.norm(self._coeffs))

    def normalized(self) -> "CoreState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return self / n

    def inner(self, other: "CoreState") -> complex:
        """``<self|other>``."""
        if other.modes != self.modes:
            raise ValueError("mode counts differ")
        a, b = self.as_dict(), other.as_dict()
        return complex(sum(np.conj(a[k]) * b[k] for k in a.keys() & b.keys()))

    def to_dense(self, cutoff: int) -> np.ndarray:
        """Dense amplitude tensor of shape ``(cutoff,) * modes``."""
        if len(self) and self._exps.max() >= cutoff:
            raise ValueError("cutoff too small for the state support")
        out = np.zeros((cutoff,) * self.modes, dtype=complex)
        for row, c in zip(self._exps, self._coeffs):
            out[tuple(row)] = c
        return out

    def __repr__(self):
        parts = [f"({c:.4g})|{','.join(map(str, row))}>" for row, c in zip(self._exps, self._coeffs)]
        return "CoreState(" + (" + ".join(parts) or "0") + ")"


class StellarPolynomial(_SparseTerms):
    """Sparse multivariate polynomial with complex coefficients."""

    _key = "exponents"
    _weighted_prune = True

    @classmethod
    def constant(cls, value: complex, nvars: int) -> "StellarPolynomial":
        return cls(nvars, np.zeros((1, nvars), dtype=np.int64), [value])

    @classmethod
    def variable(cls, index: int, nvars: int, coeff: complex = 1.0) -> "StellarPolynomial":
        row = np.zeros((1, nvars), dtype=np.int64)
        row[0, index] = 1
        return cls(nvars, row, [coeff])

    @classmethod
    def linear(cls, coeffs, constant: complex = 0.0) -> "StellarPolynomial":
        coeffs = np.asarray(coeffs, dtype=complex)
        nvars = len(coeffs)
        exps = np.vstack([np.zeros((1, nvars), dtype=np.int64), np.eye(nvars, dtype=np.int64)])
        return cls(nvars, exps, np.concatenate([[constant], coeffs]))

    @property
    def degree(self) -> int:
        return int(self._exps.sum(axis=1).max()) if len(self) else 0

    @property
    def min_degree(self) -> int:
        return int(self._exps.sum(axis=1).min()) if len(self) else 0

    def is_homogeneous(self) -> bool:
        return len(self) == 0 or self.degree == self.min_degree

    def is_zero(self) -> bool:
        return len(self) == 0

    def __mul__(self, other):
        if not isinstance(other, StellarPolynomial):
            return super().__mul__(other)
        if other.nvars != self._nvars:
            raise ValueError("variable counts differ")
        if len(self) == 0 or len(other) == 0:
            return self._new(None, None)
        exps = (self._exps[:, None, :] + other.exps[None, :, :]).reshape(-1, self._nvars)
        coeffs = np.outer(self._coeffs, other.coeffs).ravel()
        return self._new(exps, coeffs)

    __rmul__ = _SparseTerms.__rmul__

    def __pow__(self, k: int):
        out = StellarPolynomial.constant(1.0, self._nvars)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x) -> complex:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self._nvars,):
            raise ValueError("point has the wrong dimension")
        return complex(np.sum(self._coeffs * np.prod(x[None, :] ** self._exps, axis=1)))

    def evaluate_many(self, points) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape ``(k, nvars)``)."""
        points = np.asarray(points, dtype=complex)
        powers = np.prod(points[:, None, :] ** self._exps[None, :, :], axis=2)
        return powers @ self._coeffs

    def homogeneous_part(self, degree: int) -> "StellarPolynomial":
        keep = self._exps.sum(axis=1) == degree
        return self._new(self._exps[keep], self._coeffs[keep])

    def drop_variable(self, index: int) -> "StellarPolynomial":
        """Remove a variable that does not occur in any term."""
        if len(self) and np.any(self._exps[:, index]):
            raise ValueError(f"variable {index} occurs in the polynomial")
        return self._new(np.delete(self._exps, index, axis=1), self._coeffs, self._nvars - 1)

    def insert_variable(self, index: int) -> "StellarPolynomial":
        """Add an unused variable at position ``index``."""
        exps = np.insert(self._exps, index, 0, axis=1)
        return self._new(exps, self._coeffs, self._nvars + 1)

    def __repr__(self):
        if not len(self):
            return "StellarPolynomial(0)"
        parts = []
        for row, c in zip(self._exps, self._coeffs):
            mono = "*".join(f"x{j}^{e}" if e > 1 else f"x{j}" for j, e in enumerate(row) if e) or "1"
            parts.append(f"({c:.4g}){mono}")
        return "StellarPolynomial(" + " + ".join(parts) + ")"


def state_to_polynomial(state: CoreState) -> StellarPolynomial:
    """``p_n = psi_n / sqrt(n!)``."""
    scale = np.sqrt(multi_factorial(state.exps)) if len(state) else np.zeros(0)
    return StellarPolynomial(state.modes, state.exps, state.amplitudes / scale, tol=0.0)


def polynomial_to_state(poly: StellarPolynomial) -> CoreState:
    """``psi_n = p_n sqrt(n!)``."""
    scale = np.sqrt(multi_factorial(poly.exps)) if len(poly) else np.zeros(0)
    return CoreState(poly.nvars, poly.exps, poly.coeffs * scale, tol=0.0)


def _check_mode(poly: StellarPolynomial, mode: int) -> None:
    if not 0 <= mode < poly.nvars:
        raise IndexError(f"mode {mode} out of range for {poly.nvars} variables")


def apply_creation(poly: StellarPolynomial, mode: int) -> StellarPolynomial:
    """Multiply by ``x_mode`` (photon addition)."""
    _check_mode(poly, mode)
    exps = poly.exps.copy()
    exps[:, mode] += 1
    return StellarPolynomial(poly.nvars, exps, poly.coeffs)


def apply_annihilation(poly: StellarPolynomial, mode: int) -> StellarPolynomial:
    """Formal partial derivative with respect to ``x_mode``."""
    _check_mode(poly, mode)
    power = poly.exps[:, mode]
    keep = power > 0
    exps = poly.exps[keep].copy()
    exps[:, mode] -= 1
    return StellarPolynomial(poly.nvars, exps, poly.coeffs[keep] * power[keep])


def fock_project(poly: StellarPolynomial, mode: int, n: int) -> StellarPolynomial:
    """Overlap ``<n|_mode |psi>`` as a polynomial of the remaining variables.

    The coefficient of ``x_mode**n`` is multiplied by ``sqrt(n!)``, so the
    result is the literal (unnormalized) conditional state and its Bombieri
    norm squared is the joint probability weight of the outcome.
    """
    _check_mode(poly, mode)
    if n < 0:
        raise ValueError("photon number must be non-negative")
    keep = poly.exps[:, mode] == n
    exps = np.delete(poly.exps[keep], mode, axis=1)
    return StellarPolynomial(poly.nvars - 1, exps, poly.coeffs[keep] * math.sqrt(math.factorial(n)))


def specialize(poly: StellarPolynomial, mode: int, value: complex) -> StellarPolynomial:
    """Set ``x_mode = value`` and drop the variable."""
    _check_mode(poly, mode)
    power = poly.exps[:, mode]
    exps = np.delete(poly.exps, mode, axis=1)
    return StellarPolynomial(poly.nvars - 1, exps, poly.coeffs * complex(value) ** power)


def shift_variable(poly: StellarPolynomial, mode: int, value: complex) -> StellarPolynomial:
    """Substitute ``x_mode -> x_mode + value``."""
    _check_mode(poly, mode)
    # shear against a temporary constant variable, then set it to 1
    exps = np.hstack([poly.exps, np.zeros((len(poly), 1), dtype=np.int64)])
    exps, coeffs = _shear(exps, poly.coeffs.astype(complex), mode, poly.nvars, complex(value))
    return StellarPolynomial(poly.nvars, exps[:, :-1], coeffs)


def homogenize(poly: StellarPolynomial, position: int = 0) -> StellarPolynomial:
    """Pad every monomial with powers of a new variable up to the top degree.

    The new variable is inserted at ``position`` (default: first), so
    ``specialize(homogenize(p), position, 1) == p``.
    """
    if not 0 <= position <= poly.nvars:
        raise IndexError("ancilla position out of range")
    deg = poly.degree
    pad = deg - poly.exps.sum(axis=1)
    exps = np.insert(poly.exps, position, pad, axis=1)
    return StellarPolynomial(poly.nvars + 1, exps, poly.coeffs)


def bombieri_inner(p: StellarPolynomial, q: StellarPolynomial) -> complex:
    """``sum_n n! conj(p_n) q_n`` (the Fock inner product of the two states)."""
    if p.nvars != q.nvars:
        raise ValueError("variable counts differ")
    a, b = p.as_dict(), q.as_dict()
    common = a.keys() & b.keys()
    if not common:
        return 0j
    exps = np.array(sorted(common), dtype=np.int64).reshape(-1, p.nvars)
    w = multi_factorial(exps)
    return complex(sum(wk * np.conj(a[k]) * b[k] for wk, k in zip(w, map(tuple, exps.tolist()))))


def bombieri_norm(poly: StellarPolynomial) -> float:
    """``sqrt(sum_n |p_n|^2 n!)``: the Fock-space norm of the unnormalized state."""
    if not len(poly):
        return 0.0
    return float(np.sqrt(np.sum(np.abs(poly.coeffs) ** 2 * multi_factorial(poly.exps))))


# -- linear substitution ---------------------------------------------------


def _shear(exps: np.ndarray, coeffs: np.ndarray, j: int, k: int, c: complex):
    """Substitute ``x_j -> x_j + c x_k`` term by term."""
    p = exps[:, j]
    reps = p + 1
    idx = np.repeat(np.arange(len(p)), reps)
    # s = how many factors of c x_k are picked from (x_j + c x_k)^p
    s = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    pj = p[idx]
    new = exps[idx].copy()
    new[:, j] = pj - s
    new[:, k] += s
    binom = scipy.special.comb(pj, s, exact=False)
    return new, coeffs[idx] * binom * c**s


def _scale(exps: np.ndarray, coeffs: np.ndarray, diag: np.ndarray):
    return exps, coeffs * np.prod(diag[None, :] ** exps, axis=1)


def _substitute_invertible(exps, coeffs, A):
    # P(A y) with A = Pm L U  ->  substitute Pm, then L, then U
    n = A.shape[0]
    Pm, L, U = scipy.linalg.lu(A)
    perm = np.argmax(Pm, axis=1)  # (Pm y)_i = y_perm[i]
    permuted = np.zeros_like(exps)
    permuted[:, perm] = exps
    exps = permuted
    for k in range(n - 1):
        for j in range(k + 1, n):
            if L[j, k] != 0:
                exps, coeffs = _canonical(*_shear(exps, coeffs, j, k, L[j, k]), 0.0)
    diag = np.diag(U)
    exps, coeffs = _scale(exps, coeffs, diag)
    unit = U / diag[:, None]
    # unit upper factor = F_{n-1} ... F_1, so columns are substituted last to first
    for k in range(n - 1, 0, -1):
        for j in range(k):
            if unit[j, k] != 0:
                exps, coeffs = _canonical(*_shear(exps, coeffs, j, k, unit[j, k]), 0.0)
    return exps, coeffs


def _substitute_square(exps, coeffs, A):
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] > 1e-8 * s[0]:
        return _substitute_invertible(exps, coeffs, A)
    # rank deficient: A = V diag(s) W^H, each unitary factor is invertible
    V, s, Wh = np.linalg.svd(A)
    exps, coeffs = _substitute_invertible(exps, coeffs, V)
    exps, coeffs = _canonical(*_scale(exps, coeffs, s.astype(complex)), 0.0)
    return _substitute_invertible(exps, coeffs, Wh)


def substitute_linear(poly: StellarPolynomial, matrix) -> StellarPolynomial:
    """Replace each ``x_j`` by the linear form held in column ``j`` of ``matrix``.

    ``matrix`` has shape ``(n_out, nvars)``; the result is ``P(matrix.T @ y)``
    in ``n_out`` variables.  For an interferometer ``U`` this is the action
    ``a^dagger -> U.T a^dagger`` on the creation operators.

    The substitution runs through a pivoted LU factorization as a sequence of
    permutations, two-variable shears and diagonal scalings, each of which
    maps a monomial to a short binomial sum.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[1] != poly.nvars:
        raise ValueError(f"matrix must have {poly.nvars} columns, got shape {matrix.shape}")
    n_out, n_in = matrix.shape
    n = max(n_out, n_in)
    A = matrix.T
    if n_out > n_in:
        # unused input variables: any rows completing the rank will do
        A = np.vstack([A, scipy.linalg.null_space(A).T.conj()[: n - n_in]])
    elif n_out < n_in:
        # dummy output variables, set to zero afterwards
        A = np.hstack([A, scipy.linalg.null_space(A.conj().T)[:, : n - n_out]])
    A = np.pad(A, ((0, n - A.shape[0]), (0, n - A.shape[1])))
    exps = np.zeros((len(poly), n), dtype=np.int64)
    exps[:, :n_in] = poly.exps
    exps, coeffs = _substitute_square(exps, poly.coeffs.astype(complex), A)
    if n_out < n:
        keep = ~np.any(exps[:, n_out:] > 0, axis=1)
        exps, coeffs = exps[keep, :n_out], coeffs[keep]
    return StellarPolynomial(n_out, exps, coeffs)
