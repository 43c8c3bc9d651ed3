"""Circuit primitives and their JSON representation.

Mode conventions: mode 0 is the heralding ancilla, mode 1 the
dehomogenization ancilla when one is present, target modes follow.

``Interferometer(U)`` maps the creation operators as ``a^dag -> U^T a^dag``,
so the stellar polynomial transforms as ``P(x) -> P(U^T x)``.  ``Displace``
uses the shift convention: followed by ``VacuumProject`` on the same mode it
evaluates the polynomial at ``x_mode = amount`` (physically ``<0|D(-conj(amount))``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .linalg import is_unitary

__all__ = [
    "Interferometer",
    "PhotonAdd",
    "PNRProject",
    "Displace",
    "VacuumProject",
    "DisplacedSubtract",
    "Circuit",
    "CircuitError",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Interferometer:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        U = np.array(self.matrix, dtype=complex)
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)

    @property
    def modes(self):
        return tuple(range(len(self.matrix)))

    def __eq__(self, other):
        return isinstance(other, Interferometer) and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


@dataclass(frozen=True)
class PhotonAdd:
    mode: int


@dataclass(frozen=True)
class PNRProject:
    mode: int
    n: int


@dataclass(frozen=True)
class Displace:
    mode: int
    amount: complex


@dataclass(frozen=True)
class VacuumProject:
    mode: int


@dataclass(frozen=True)
class DisplacedSubtract:
    """``D(conj(root)) a D^dag(conj(root)) = a - conj(root)`` on ``mode``."""

    mode: int
    root: complex


Op = Union[Interferometer, PhotonAdd, PNRProject, Displace, VacuumProject, DisplacedSubtract]


def _complex_pairs(U):
    return [[[float(z.real), float(z.imag)] for z in row] for row in U]


def _op_to_json(op) -> dict:
    if isinstance(op, Interferometer):
        return {"type": "interferometer", "matrix": _complex_pairs(op.matrix)}
    if isinstance(op, PhotonAdd):
        return {"type": "add", "mode": op.mode}
    if isinstance(op, PNRProject):
        return {"type": "pnr", "mode": op.mode, "n": op.n}
    if isinstance(op, Displace):
        a = complex(op.amount)
        return {"type": "displace", "mode": op.mode, "re": a.real, "im": a.imag}
    if isinstance(op, VacuumProject):
        return {"type": "vacuum_project", "mode": op.mode}
    if isinstance(op, DisplacedSubtract):
        r = complex(op.root)
        return {"type": "displaced_subtract", "mode": op.mode, "root_re": r.real, "root_im": r.imag}
    raise CircuitError(f"unknown operation {op!r}")


def _op_from_json(d: dict):
    kind = d.get("type")
    try:
        if kind == "interferometer":
            m = np.array(d["matrix"], dtype=float)
            return Interferometer(m[..., 0] + 1j * m[..., 1])
        if kind == "add":
            return PhotonAdd(int(d["mode"]))
        if kind == "pnr":
            return PNRProject(int(d["mode"]), int(d["n"]))
        if kind == "displace":
            return Displace(int(d["mode"]), complex(d["re"], d["im"]))
        if kind == "vacuum_project":
            return VacuumProject(int(d["mode"]))
        if kind == "displaced_subtract":
            return DisplacedSubtract(int(d["mode"]), complex(d["root_re"], d["root_im"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise CircuitError(f"malformed {kind!r} operation: {exc}") from exc
    raise CircuitError(f"unknown operation type {kind!r}")


@dataclass(frozen=True)
class Circuit:
    total_modes: int
    ops: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def validate(self, atol: float = 1e-10) -> "Circuit":
        for op in self.ops:
            if isinstance(op, Interferometer):
                if op.matrix.shape != (self.total_modes, self.total_modes):
                    raise CircuitError(f"interferometer has shape {op.matrix.shape}, expected {self.total_modes} modes")
                if not is_unitary(op.matrix, atol):
                    raise CircuitError("interferometer matrix is not unitary")
            elif not 0 <= op.mode < self.total_modes:
                raise CircuitError(f"mode {op.mode} out of range for {self.total_modes} modes")
            if isinstance(op, PNRProject) and op.n < 0:
                raise CircuitError("PNR outcome must be non-negative")
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.total_modes != self.total_modes:
            raise CircuitError("mode counts differ")
        return Circuit(self.total_modes, self.ops + other.ops)

    def append(self, *ops) -> "Circuit":
        return Circuit(self.total_modes, self.ops + tuple(ops))

    def count(self, kind) -> int:
        return sum(isinstance(op, kind) for op in self.ops)

    @property
    def additions(self) -> int:
        return self.count(PhotonAdd)

    @property
    def pnr_order(self) -> int:
        return sum(op.n for op in self.ops if isinstance(op, PNRProject))

    @property
    def has_projection(self) -> bool:
        return any(isinstance(op, (PNRProject, VacuumProject)) for op in self.ops)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "total_modes": self.total_modes,
            "ops": [_op_to_json(op) for op in self.ops],
        }

    def to_json(self, **kwargs) -> str:
        # repr of a float is the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        try:
            return cls(int(d["total_modes"]), tuple(_op_from_json(op) for op in d["ops"]))
        except (KeyError, TypeError) as exc:
            raise CircuitError(f"malformed circuit: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))
