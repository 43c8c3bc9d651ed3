import json

import numpy as np
import pytest

from conftest import random_unitary
from stellarprep.circuit import (
    SCHEMA_VERSION,
    Circuit,
    CircuitError,
    Displace,
    DisplacedSubtract,
    Interferometer,
    PhotonAdd,
    PNRProject,
    VacuumProject,
)


def _sample_circuit():
    U = random_unitary(3, np.random.default_rng(0))
    return Circuit(
        3,
        (
            PhotonAdd(0),
            Interferometer(U),
            PhotonAdd(0),
            PNRProject(0, 1),
            Displace(1, 1.0 - 0.25j),
            VacuumProject(1),
            DisplacedSubtract(2, 1 / 3 + 2j),
            VacuumProject(2),
        ),
    )


def test_json_round_trip_is_exact():
    c = _sample_circuit()
    text = c.to_json()
    back = Circuit.from_json(text)
    assert back.to_json() == text
    assert np.array_equal(back.ops[1].matrix, c.ops[1].matrix)
    assert back.ops == c.ops


def test_json_layout():
    d = json.loads(_sample_circuit().to_json())
    assert d["schema_version"] == SCHEMA_VERSION
    assert d["total_modes"] == 3
    types = [op["type"] for op in d["ops"]]
    assert types == ["add", "interferometer", "add", "pnr", "displace", "vacuum_project", "displaced_subtract", "vacuum_project"]
    assert len(d["ops"][1]["matrix"][0][0]) == 2
    assert d["ops"][6]["root_im"] == 2.0


def test_counts():
    c = _sample_circuit()
    assert c.additions == 2
    assert c.pnr_order == 1
    assert c.count(DisplacedSubtract) == 1
    assert c.has_projection


def test_validate_rejects_non_unitary():
    with pytest.raises(CircuitError):
        Circuit(2, (Interferometer(np.array([[1, 1], [0, 1]])),)).validate()


def test_validate_rejects_wrong_size():
    with pytest.raises(CircuitError):
        Circuit(3, (Interferometer(np.eye(2)),)).validate()


def test_validate_rejects_bad_mode():
    with pytest.raises(CircuitError):
        Circuit(2, (PhotonAdd(2),)).validate()
    with pytest.raises(CircuitError):
        Circuit(2, (PNRProject(0, -1),)).validate()


@pytest.mark.parametrize(
    "payload",
    [
        {"total_modes": 2, "ops": [{"type": "teleport", "mode": 0}]},
        {"total_modes": 2, "ops": [{"type": "pnr", "mode": 0}]},
        {"ops": []},
    ],
)
def test_malformed_json(payload):
    with pytest.raises(CircuitError):
        Circuit.from_dict(payload)


def test_append_and_concatenate():
    a = Circuit(2, (PhotonAdd(0),))
    b = a.append(PhotonAdd(1))
    assert len(a.ops) == 1 and len(b.ops) == 2
    assert (a + b).additions == 3
    with pytest.raises(CircuitError):
        a + Circuit(3)
