"""Built-in benchmark states, written as Fock-basis superpositions."""
from __future__ import annotations

import math
import re

import numpy as np

from .fock import CoreState

__all__ = ["BENCHMARK_STATES", "builtin_state", "ghz_state", "state_names", "random_two_photon_state"]

_S3, _S6 = math.sqrt(3), math.sqrt(6)

# occupation strings with relative amplitudes (normalized on construction)
BENCHMARK_STATES: dict[str, list[tuple[str, float]]] = {
    "psi1": [("200", 1), ("020", 1), ("002", 1)],
    "psi2": [("300", 1), ("030", 1), ("003", 1)],
    "psi3": [("400", 1), ("040", 1), ("004", 1)],
    "psi4": [("2000", 1), ("0200", 1), ("0020", 1), ("0002", 1)],
    "psi5": [("012", 1), ("120", 1), ("201", 1), ("021", 1), ("102", 1), ("210", 1)],
    "psi6": [("110", 1), ("101", 1), ("011", 1)],
    "psi7": [("220", 1), ("202", 1), ("022", 1)],
    "psi8": [("2000", 1), ("0110", 1), ("0002", 1)],
    "psi9": [("3000", 1), ("0210", 1), ("0120", 1), ("0003", 1)],
    "psi10": [("040", 1), ("121", 1), ("202", 1)],
    "r2": [("300", 1), ("120", _S3), ("111", _S6), ("102", _S3)],
    "r4": [("300", 1), ("030", 1), ("003", 1), ("111", 1)],
    "r5": [("210", 1), ("021", 1)],
    "k3": [
        ("3000", 1), ("2100", 1), ("2010", 1), ("2001", 1),
        ("1110", -1), ("1101", -1), ("1011", -1), ("0111", -1),
    ],
}

_ALIASES = {"ψ": "psi", "Ψ": "psi", "R": "r", "K": "k"}
_SUBSCRIPTS = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")


def _from_strings(terms) -> CoreState:
    modes = len(terms[0][0])
    state = CoreState.from_dict({tuple(int(c) for c in occ): amp for occ, amp in terms}, modes)
    return state.normalized()


def ghz_state(M: int) -> CoreState:
    """``(|0...0> + |1...1>) / sqrt(2)`` on ``M`` modes."""
    if M < 1:
        raise ValueError("GHZ state needs at least one mode")
    return _from_strings([("0" * M, 1), ("1" * M, 1)])


def _canonical_name(name: str) -> str:
    name = name.strip().translate(_SUBSCRIPTS)
    for k, v in _ALIASES.items():
        name = name.replace(k, v)
    return name.lower().replace("_", "").replace("-", "")


def builtin_state(name: str) -> CoreState:
    """Resolve ``psi1``..``psi10``, ``r2``, ``r4``, ``r5``, ``k3`` or ``ghz-M``."""
    key = _canonical_name(name)
    if key in BENCHMARK_STATES:
        return _from_strings(BENCHMARK_STATES[key])
    m = re.fullmatch(r"ghz(\d+)", key)
    if m:
        return ghz_state(int(m.group(1)))
    raise KeyError(f"unknown built-in state {name!r}")


def state_names() -> list[str]:
    return list(BENCHMARK_STATES)


def random_two_photon_state(M: int, rng: np.random.Generator) -> CoreState:
    """Two-photon state with i.i.d. complex standard normal Fock amplitudes."""
    terms = {}
    for i in range(M):
        for j in range(i, M):
            n = [0] * M
            n[i] += 1
            n[j] += 1
            terms[tuple(n)] = complex(rng.normal(), rng.normal())
    return CoreState.from_dict(terms, M).normalized()
