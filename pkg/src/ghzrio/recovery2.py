"""The 24 two-qubit fixed recovery forms as CNOT / NOT gate products.

Each sequence lists its gates in printed (left-to-right) order, so the
rightmost gate acts first and ``eval_sequence`` is the plain matrix product.
Basis order is |Y1 Y2> with Y1 the most significant bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .restricted import build_R, index_from_perm

LABELS = ("Y1", "Y2")
KINDS = ("CNOT", "NOT", "IDENTITY")


@dataclass(frozen=True)
class GateStep:
    kind: str
    target: str = "Y1"
    control: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.target not in LABELS or (self.control is not None and self.control not in LABELS):
            raise ValueError(f"gate labels must be in {LABELS}")
        if self.kind == "CNOT" and (self.control is None or self.control == self.target):
            raise ValueError("CNOT needs a control distinct from its target")
        if self.kind != "CNOT" and self.control is not None:
            raise ValueError(f"{self.kind} takes no control")

    def matrix(self) -> np.ndarray:
        if self.kind == "IDENTITY":
            return np.eye(4, dtype=int)
        if self.kind == "NOT":
            x = np.array([[0, 1], [1, 0]], dtype=int)
            eye = np.eye(2, dtype=int)
            return np.kron(x, eye) if self.target == "Y1" else np.kron(eye, x)
        m = np.zeros((4, 4), dtype=int)
        c, t = LABELS.index(self.control), LABELS.index(self.target)
        for col in range(4):
            bits = [(col >> 1) & 1, col & 1]
            if bits[c]:
                bits[t] ^= 1
            m[bits[0] * 2 + bits[1], col] = 1
        return m

    def __str__(self):
        if self.kind == "CNOT":
            return f"CNOT({self.control},{self.target})"
        if self.kind == "NOT":
            return f"NOT({self.target})"
        return "I"


@dataclass(frozen=True)
class GateSequence:
    steps: tuple[GateStep, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.steps:
            raise ValueError("use an explicit IDENTITY step for the empty product")

    def __str__(self):
        return " . ".join(str(s) for s in self.steps)


def _cx(c: str, t: str) -> GateStep:
    return GateStep("CNOT", target=t, control=c)


C12 = _cx("Y1", "Y2")
C21 = _cx("Y2", "Y1")
X1 = GateStep("NOT", target="Y1")  # sigma_1 (x) I
X2 = GateStep("NOT", target="Y2")  # I (x) sigma_1
ID = GateStep("IDENTITY")

_CATALOG = {
    1: (ID,),
    2: (C12,),
    3: (C21, C12, C21),
    4: (C21, C12),
    5: (C12, C21),
    6: (C21,),
    7: (C12, X2),
    8: (X2,),
    9: (X1, C12, C21),
    10: (C21, X2),
    11: (C21, X1, C12, C21),
    12: (C21, C12, X2),
    13: (C21, C12, X1),
    14: (C21, C12, X1, C21),
    15: (C21, X1),
    16: (C12, X1, C21),
    17: (X1,),
    18: (C12, X1),
    19: (X2, C21),
    20: (C12, X2, C21),
    21: (C21, X1, C12),
    22: (C21, C12, X2, C21),
    23: (X1, C12),
    24: (X1, X2),
}


def catalog(x: int) -> GateSequence:
    if x not in _CATALOG:
        raise ValueError(f"catalog index must be in 1..24, got {x!r}")
    return GateSequence(_CATALOG[x])


def eval_sequence(seq: GateSequence) -> np.ndarray:
    out = np.eye(4, dtype=int)
    for step in seq.steps:
        out = out @ step.matrix()
    return out


def _as_perm(mat: np.ndarray) -> tuple[int, ...]:
    # row m holds its single 1 in column p_m
    return tuple(int(np.flatnonzero(row)[0]) + 1 for row in mat)


@dataclass
class CatalogReport:
    correspondence: dict[int, Optional[int]]
    mismatches: list[dict]
    set_equal: bool
    all_permutation_matrices: bool
    pairwise_distinct: bool

    @property
    def identity_order(self) -> bool:
        return all(k == v for k, v in self.correspondence.items())

    @property
    def passed(self) -> bool:
        return self.set_equal and self.all_permutation_matrices and self.pairwise_distinct

    def to_dict(self) -> dict:
        return {
            "set_equal": self.set_equal,
            "identity_order": self.identity_order,
            "all_permutation_matrices": self.all_permutation_matrices,
            "pairwise_distinct": self.pairwise_distinct,
            "correspondence": {str(k): v for k, v in self.correspondence.items()},
            "mismatches": self.mismatches,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _is_perm_matrix(m: np.ndarray) -> bool:
    return (
        set(np.unique(m).tolist()) <= {0, 1}
        and (m.sum(axis=0) == 1).all()
        and (m.sum(axis=1) == 1).all()
    )


def verify_catalog() -> CatalogReport:
    """Compare every catalog product with R_2(x) under lexicographic indexing."""
    mats = {x: eval_sequence(catalog(x)) for x in range(1, 25)}
    perm_ok = all(_is_perm_matrix(m) for m in mats.values())
    corr: dict[int, Optional[int]] = {}
    mismatches = []
    for x, m in mats.items():
        corr[x] = index_from_perm(_as_perm(m)) if _is_perm_matrix(m) else None
        ref = build_R(x, 2).real.astype(int)
        if not np.array_equal(m, ref):
            mismatches.append(
                {"x": x, "catalog": m.tolist(), "lexicographic": ref.tolist()}
            )
    distinct = len({m.tobytes() for m in mats.values()}) == 24
    set_equal = sorted(v for v in corr.values() if v is not None) == list(range(1, 25))
    return CatalogReport(corr, mismatches, set_equal, perm_ok, distinct)
