from __future__ import annotations

import json

import numpy as np
import pytest

from ghzrio.recovery2 import (
    C12,
    C21,
    X1,
    X2,
    GateSequence,
    GateStep,
    catalog,
    eval_sequence,
    verify_catalog,
)
from ghzrio.restricted import build_R

CNOT12 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
CNOT21 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]])
NOT = np.array([[0, 1], [1, 0]])


def test_gate_matrices():
    assert np.array_equal(C12.matrix(), CNOT12)
    assert np.array_equal(C21.matrix(), CNOT21)
    assert np.array_equal(X1.matrix(), np.kron(NOT, np.eye(2, dtype=int)))
    assert np.array_equal(X2.matrix(), np.kron(np.eye(2, dtype=int), NOT))


def test_printed_order_is_matrix_order():
    assert np.array_equal(eval_sequence(catalog(4)), CNOT21 @ CNOT12)
    assert np.array_equal(eval_sequence(catalog(5)), CNOT12 @ CNOT21)


def test_three_cnots_make_swap():
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    assert np.array_equal(eval_sequence(catalog(3)), swap)


@pytest.mark.parametrize("x", range(1, 25))
def test_each_entry_matches_lexicographic_set(x):
    m = eval_sequence(catalog(x))
    assert m.dtype.kind == "i"
    assert np.array_equal(m, build_R(x, 2).real.astype(int))


def test_report():
    rep = verify_catalog()
    assert rep.passed and rep.identity_order
    assert rep.set_equal and rep.pairwise_distinct and rep.all_permutation_matrices
    assert rep.mismatches == []
    doc = json.loads(rep.to_json())
    assert doc["correspondence"] == {str(x): x for x in range(1, 25)}
    assert json.loads(json.dumps(doc)) == doc


@pytest.mark.parametrize("bad", [0, 25])
def test_catalog_range(bad):
    with pytest.raises(ValueError):
        catalog(bad)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "SWAP"},
        {"kind": "CNOT", "target": "Y1"},
        {"kind": "CNOT", "target": "Y1", "control": "Y1"},
        {"kind": "NOT", "target": "Y1", "control": "Y2"},
        {"kind": "NOT", "target": "Y3"},
    ],
)
def test_gate_step_validation(kwargs):
    with pytest.raises(ValueError):
        GateStep(**kwargs)


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        GateSequence(())
    assert str(catalog(11)) == "CNOT(Y2,Y1) . NOT(Y1) . CNOT(Y1,Y2) . CNOT(Y2,Y1)"
