"""Labeled state-vector register.

Amplitudes are stored in big-endian order over the register's labels: the
first label is the most significant bit of the global basis index.  All
values are immutable; every function returns a new state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_QUBITS = 20
ROLE_CLASSES = frozenset("ABCXYZ")

NORM_TOL = 1e-12
FACTOR_TOL = 1e-10


class NonProductError(ValueError):
    """Raised when a register does not factor over the requested split."""


def role_of(label: str) -> str:
    return label[0]


@dataclass(frozen=True)
class SpaceStructure:
    """Ordered qubit labels; position 0 is the most significant bit."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        for lab in labels:
            if not lab or role_of(lab) not in ROLE_CLASSES:
                raise ValueError(f"label {lab!r} has no role class in {sorted(ROLE_CLASSES)}")
        if len(labels) > MAX_QUBITS:
            raise ValueError(f"{len(labels)} qubits exceeds the {MAX_QUBITS}-qubit cap")

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown qubit label {label!r}") from None

    def __add__(self, other: SpaceStructure) -> SpaceStructure:
        return SpaceStructure(self.labels + other.labels)


def _as_structure(labels) -> SpaceStructure:
    if isinstance(labels, SpaceStructure):
        return labels
    if isinstance(labels, str):
        labels = (labels,)
    return SpaceStructure(tuple(labels))


@dataclass(frozen=True)
class StateVector:
    structure: SpaceStructure
    amps: np.ndarray = field(repr=False)
    normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(self.structure):
            raise ValueError(
                f"{amps.size} amplitudes for {len(self.structure)} qubits"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm_sq() - 1.0) > NORM_TOL:
            raise ValueError(f"state flagged normalized has norm^2 {self.norm_sq()!r}")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.structure.labels

    @property
    def n_qubits(self) -> int:
        return len(self.structure)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)

    def kron(self, other: StateVector) -> StateVector:
        return StateVector(
            self.structure + other.structure,
            np.kron(self.amps, other.amps),
            self.normalized and other.normalized,
        )

    def renormalized(self) -> StateVector:
        nrm = self.norm_sq()
        if nrm == 0.0:
            raise ValueError("cannot renormalize a zero-norm branch")
        return StateVector(self.structure, self.amps / np.sqrt(nrm), True)


def make_basis(structure, bits: Sequence[int]) -> StateVector:
    structure = _as_structure(structure)
    bits = list(bits)
    if len(bits) != len(structure):
        raise ValueError(f"{len(bits)} bits for {len(structure)} qubits")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0/1, got {bits}")
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    amps = np.zeros(2 ** len(structure), dtype=complex)
    amps[idx] = 1.0
    return StateVector(structure, amps)


def make_ghz(labels: Sequence[str]) -> StateVector:
    """(|000> + |111>)/sqrt(2) over three labels."""
    structure = _as_structure(labels)
    if len(structure) != 3:
        raise ValueError("a GHZ state needs exactly three labels")
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / np.sqrt(2)
    return StateVector(structure, amps)


def make_bell(labels: Sequence[str]) -> StateVector:
    """(|00> + |11>)/sqrt(2) over two labels."""
    structure = _as_structure(labels)
    if len(structure) != 2:
        raise ValueError("a Bell pair needs exactly two labels")
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / np.sqrt(2)
    return StateVector(structure, amps)


def make_random_state(labels: Sequence[str], seed: int) -> StateVector:
    """Normalized complex-Gaussian state; identical for identical seeds."""
    structure = _as_structure(labels)
    if len(structure) < 1:
        raise ValueError("need at least one label")
    rng = np.random.default_rng(seed)
    dim = 2 ** len(structure)
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    return StateVector(structure, amps)


def from_amplitudes(labels: Sequence[str], amps, normalize: bool = True) -> StateVector:
    structure = _as_structure(labels)
    amps = np.asarray(amps, dtype=complex)
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("zero amplitude vector")
        amps = amps / nrm
    return StateVector(structure, amps, normalized=normalize)


def apply_local(op, targets: Sequence[str] | str, state: StateVector) -> StateVector:
    """Apply a 2^k x 2^k operator to the k target qubits of ``state``.

    The first target is the most significant bit of ``op``'s index.  No
    2^n x 2^n matrix is ever formed.
    """
    if isinstance(targets, str):
        targets = (targets,)
    targets = tuple(targets)
    k = len(targets)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator of shape {op.shape} does not act on {k} qubit(s)")
    if len(set(targets)) != k:
        raise ValueError(f"repeated target in {targets}")
    axes = [state.structure.index(t) for t in targets]
    psi = state.tensor()
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return StateVector(state.structure, out.reshape(-1), normalized=False)


def project(label: str, outcome: int, state: StateVector) -> tuple[StateVector, float]:
    """Collapse ``label`` onto |outcome>, keeping the qubit in the register.

    Returns the unnormalized branch and its squared norm.
    """
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    axis = state.structure.index(label)
    psi = np.array(state.tensor())
    sl = [slice(None)] * state.n_qubits
    sl[axis] = 1 - outcome
    psi[tuple(sl)] = 0.0
    branch = StateVector(state.structure, psi.reshape(-1), normalized=False)
    return branch, branch.norm_sq()


def fidelity_up_to_phase(a: StateVector, b: StateVector) -> float:
    if a.labels != b.labels:
        raise ValueError(f"structures differ: {a.labels} vs {b.labels}")
    na, nb = a.norm_sq(), b.norm_sq()
    if na == 0.0 or nb == 0.0:
        raise ValueError("fidelity of a zero-norm state is undefined")
    ov = np.vdot(a.amps, b.amps)
    return float(min(1.0, abs(ov) ** 2 / (na * nb)))


def _slice_at(state: StateVector, keep: Sequence[str], fixed: Mapping[str, int]) -> np.ndarray:
    labels = state.labels
    missing = set(labels) - set(keep) - set(fixed)
    extra = (set(keep) | set(fixed)) - set(labels)
    if missing or extra or set(keep) & set(fixed):
        raise ValueError(
            f"keep {tuple(keep)} and fixed {sorted(fixed)} must partition {labels}"
        )
    idx = tuple(fixed[lab] if lab in fixed else slice(None) for lab in labels)
    sub = state.tensor()[idx]
    free = [lab for lab in labels if lab not in fixed]
    return np.transpose(sub, [free.index(lab) for lab in keep])


def amplitudes_at(state: StateVector, keep: Sequence[str], fixed_outcomes: Mapping[str, int]) -> np.ndarray:
    """Raw (unnormalized) amplitudes of ``keep`` with every other label pinned."""
    return _slice_at(state, tuple(keep), fixed_outcomes).reshape(-1)


def extract_factor(state: StateVector, keep: Sequence[str], fixed_outcomes: Mapping[str, int]) -> StateVector:
    """Read off the ``keep`` register once every other qubit sits at a known outcome."""
    keep = tuple(keep)
    sub = _slice_at(state, keep, fixed_outcomes).reshape(-1)
    total = state.norm_sq()
    kept = float(np.vdot(sub, sub).real)
    if total == 0.0 or kept == 0.0:
        raise NonProductError("branch has zero weight on the requested outcomes")
    residual = (total - kept) / total
    if residual > FACTOR_TOL:
        raise NonProductError(f"residual weight {residual:.3e} outside the fixed outcomes")
    return StateVector(SpaceStructure(keep), sub / np.sqrt(kept), True)


def reduced_fidelity(
    state: StateVector,
    keep: Sequence[str],
    fixed_outcomes: Mapping[str, int],
    target: StateVector,
) -> float:
    """<target| rho |target> where rho is ``keep`` after conditioning on
    ``fixed_outcomes`` and tracing out every remaining label."""
    keep = tuple(keep)
    labels = state.labels
    traced = [lab for lab in labels if lab not in keep and lab not in fixed_outcomes]
    sub = _slice_at(state, keep + tuple(traced), fixed_outcomes)
    mat = sub.reshape(2 ** len(keep), -1)
    weight = float(np.vdot(mat, mat).real)
    if weight == 0.0:
        raise ValueError("zero-weight branch")
    if target.labels != keep:
        raise ValueError(f"target labels {target.labels} differ from {keep}")
    tvec = target.amps / np.sqrt(target.norm_sq())
    proj = tvec.conj() @ mat
    return float(np.vdot(proj, proj).real / weight)


def operator_on(op, targets: Sequence[str], structure) -> np.ndarray:
    """Dense embedding of a local operator; test-time helper for small registers."""
    structure = _as_structure(structure)
    dim = 2 ** len(structure)
    cols = []
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1.0
        cols.append(apply_local(op, targets, StateVector(structure, e)).amps)
    return np.array(cols).T


def tensor_all(states: Iterable[StateVector]) -> StateVector:
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = out.kron(s)
    return out
