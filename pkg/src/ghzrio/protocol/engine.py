"""LOCC executor.

A protocol is an ordered list of steps (``Gate``, ``Measure``, ``Send``)
attributed to parties.  The engine owns the joint state; each party owns a
fixed set of qubit labels and sees only its own measurement outcomes and the
messages delivered to it.  Classically conditioned gates receive a
``PartyView`` and nothing else, so reading a value before its message has
arrived raises ``CausalityError``.

Measurements branch: in ``all`` mode the executor forks the in-flight branch
at every measurement (prefix work is shared between outcomes), in ``fixed``
mode it follows given bits, in ``sample`` mode it draws from a seeded
generator and renormalizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

from ..qstate import StateVector, apply_local, project

ZERO_WEIGHT = 1e-14


class LoccViolation(RuntimeError):
    """A party touched a qubit it does not own."""


class CausalityError(RuntimeError):
    """A party read a classical value that has not been delivered to it."""


@dataclass(frozen=True)
class ClassicalMessage:
    sender: str
    receiver: str
    tag: str
    payload: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.payload)

    def to_dict(self) -> dict:
        return {
            "from": self.sender,
            "to": self.receiver,
            "tag": self.tag,
            "bits": "".join(map(str, self.payload)),
            "width": self.width,
        }


@dataclass(frozen=True)
class QuantumOpEvent:
    party: str
    name: str
    targets: tuple[str, ...]


@dataclass(frozen=True)
class MeasurementEvent:
    party: str
    label: str
    outcome: int
    probability: float  # conditional on the branch so far
    branch_probability: float  # cumulative


Event = Union[QuantumOpEvent, MeasurementEvent, ClassicalMessage]


class PartyView:
    """What one party can see: its qubits, its outcomes, its inbox."""

    def __init__(self, name: str, qubits: frozenset, outcomes: Mapping[str, int], inbox: Mapping[str, tuple]):
        self.name = name
        self.qubits = qubits
        self._outcomes = outcomes
        self._inbox = inbox

    def outcome(self, label: str) -> int:
        if label not in self.qubits:
            raise LoccViolation(f"{self.name} cannot read the outcome of {label}")
        if label not in self._outcomes:
            raise CausalityError(f"{self.name} has not measured {label} yet")
        return self._outcomes[label]

    def outcomes(self, labels: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.outcome(lab) for lab in labels)

    def read(self, tag: str) -> tuple[int, ...]:
        if tag not in self._inbox:
            raise CausalityError(f"{self.name} has not received {tag!r}")
        return self._inbox[tag]

    def has(self, tag: str) -> bool:
        return tag in self._inbox


MatrixSource = Union[np.ndarray, Callable[[PartyView], np.ndarray]]


@dataclass(frozen=True)
class Gate:
    party: str
    name: str
    targets: tuple[str, ...]
    matrix: MatrixSource = field(repr=False)


@dataclass(frozen=True)
class Measure:
    party: str
    label: str


@dataclass(frozen=True)
class Send:
    sender: str
    receiver: str
    tag: str
    payload: Callable[[PartyView], Sequence[int]] = field(repr=False)


Step = Union[Gate, Measure, Send]


class Branch:
    """One in-flight measurement branch."""

    __slots__ = ("state", "events", "inboxes", "outcomes", "probability")

    def __init__(self, state, events, inboxes, outcomes, probability):
        self.state = state
        self.events = events
        self.inboxes = inboxes
        self.outcomes = outcomes
        self.probability = probability

    def fork(self) -> Branch:
        return Branch(
            self.state,
            list(self.events),
            {p: dict(box) for p, box in self.inboxes.items()},
            dict(self.outcomes),
            self.probability,
        )

    @property
    def messages(self) -> list[ClassicalMessage]:
        return [e for e in self.events if isinstance(e, ClassicalMessage)]


@dataclass(frozen=True)
class OutcomeMode:
    kind: str = "all"  # all | fixed | sample
    bits: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("all", "fixed", "sample"):
            raise ValueError(f"unknown outcome mode {self.kind!r}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("fixed outcomes must be bits")


class Engine:
    def __init__(self, parties: Mapping[str, Sequence[str]], steps: Sequence[Step], initial: StateVector):
        self.parties = {p: frozenset(q) for p, q in parties.items()}
        owners = {}
        for p, qs in self.parties.items():
            for q in qs:
                if q in owners:
                    raise ValueError(f"{q} owned by both {owners[q]} and {p}")
                owners[q] = p
        unknown = set(owners) - set(initial.labels)
        if unknown:
            raise ValueError(f"parties own labels absent from the register: {sorted(unknown)}")
        self.steps = tuple(steps)
        self.initial = initial
        for st in self.steps:
            self._check_step(st)

    def _check_step(self, st: Step):
        if isinstance(st, Gate):
            foreign = set(st.targets) - self.parties[st.party]
            if foreign:
                raise LoccViolation(f"{st.party} applies {st.name} to foreign qubits {sorted(foreign)}")
        elif isinstance(st, Measure):
            if st.label not in self.parties[st.party]:
                raise LoccViolation(f"{st.party} measures foreign qubit {st.label}")
        elif isinstance(st, Send):
            for p in (st.sender, st.receiver):
                if p not in self.parties:
                    raise ValueError(f"unknown party {p!r}")

    @property
    def measurement_order(self) -> tuple[str, ...]:
        return tuple(st.label for st in self.steps if isinstance(st, Measure))

    def _view(self, br: Branch, party: str) -> PartyView:
        qubits = self.parties[party]
        own = {lab: b for lab, b in br.outcomes.items() if lab in qubits}
        return PartyView(party, qubits, own, br.inboxes.setdefault(party, {}))

    def _do(self, br: Branch, st: Step):
        if isinstance(st, Gate):
            mat = st.matrix(self._view(br, st.party)) if callable(st.matrix) else st.matrix
            br.state = apply_local(mat, st.targets, br.state)
            br.events.append(QuantumOpEvent(st.party, st.name, st.targets))
        else:
            payload = tuple(int(b) for b in st.payload(self._view(br, st.sender)))
            msg = ClassicalMessage(st.sender, st.receiver, st.tag, payload)
            br.inboxes.setdefault(st.receiver, {})[st.tag] = payload
            br.events.append(msg)

    def _measure(self, br: Branch, st: Measure, bit: int, renormalize: bool) -> float:
        before = br.state.norm_sq()
        branch, weight = project(st.label, bit, br.state)
        cond = weight / before if before else 0.0
        if renormalize and weight > 0:
            branch = branch.renormalized()
            br.probability *= cond
        else:
            br.probability = weight
        br.state = branch
        br.outcomes[st.label] = bit
        br.events.append(MeasurementEvent(st.party, st.label, bit, cond, br.probability))
        return cond

    def run(self, mode: OutcomeMode = OutcomeMode()) -> list[Branch]:
        root = Branch(self.initial, [], {p: {} for p in self.parties}, {}, 1.0)
        if mode.kind == "all":
            return list(self._enumerate(root, 0))
        if mode.kind == "fixed":
            order = self.measurement_order
            if len(mode.bits) != len(order):
                raise ValueError(f"need {len(order)} outcome bits for {order}, got {len(mode.bits)}")
            bits = dict(zip(order, mode.bits))
            for st in self.steps:
                if isinstance(st, Measure):
                    self._measure(root, st, bits[st.label], renormalize=False)
                    if root.probability <= ZERO_WEIGHT:
                        raise ValueError(f"outcome {bits[st.label]} on {st.label} has zero probability")
                else:
                    self._do(root, st)
            return [root]
        rng = np.random.default_rng(mode.seed)
        for st in self.steps:
            if isinstance(st, Measure):
                _, w0 = project(st.label, 0, root.state)
                p0 = w0 / root.state.norm_sq()
                bit = 0 if rng.random() < p0 else 1
                self._measure(root, st, bit, renormalize=True)
            else:
                self._do(root, st)
        return [root]

    def _enumerate(self, br: Branch, start: int) -> Iterator[Branch]:
        for i in range(start, len(self.steps)):
            st = self.steps[i]
            if isinstance(st, Measure):
                for bit in (0, 1):
                    child = br.fork()
                    self._measure(child, st, bit, renormalize=False)
                    if child.probability > ZERO_WEIGHT:
                        yield from self._enumerate(child, i + 1)
                return
            self._do(br, st)
        yield br
