"""Step lists for the four protocol families and the branch-level verifier."""
from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..qstate import (
    NonProductError,
    StateVector,
    apply_local,
    extract_factor,
    fidelity_up_to_phase,
    from_amplitudes,
    make_bell,
    make_ghz,
    make_random_state,
    reduced_fidelity,
    tensor_all,
)
from ..restricted import CNOT, HADAMARD, SetIndex, build_R, kron_all, r_gate, sigma
from .config import (
    COMBINED_1Q,
    COMBINED_NQ,
    CONTROLLED_1Q,
    CONTROLLED_NQ,
    GHZ_QUBIT,
    UNKNOWN_QUBIT,
    OpSpec,
    ProtocolConfig,
)
from .engine import (
    Branch,
    ClassicalMessage,
    Engine,
    Gate,
    Measure,
    MeasurementEvent,
    OutcomeMode,
    PartyView,
    QuantumOpEvent,
    Send,
)

FIDELITY_TOL = 1e-9
CONTROLLED_ROLES = ("Charlie", "Alice", "Bob")  # controller, sender, receiver
COMBINED_ROLES = ("Alice", "Bob", "Charlie")  # first sender, second sender, receiver


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def _sig(bit: int) -> np.ndarray:
    return sigma(1) if bit else sigma(0)


# small conditioned matrices recur at every branch node; build each once
@lru_cache(maxsize=None)
def _sig_all(bits: tuple[int, ...]) -> np.ndarray:
    return _frozen(kron_all([_sig(b) for b in bits]))


@lru_cache(maxsize=None)
def _r_all(bits: tuple[int, ...]) -> np.ndarray:
    return _frozen(kron_all([r_gate(b) for b in bits]))


@lru_cache(maxsize=None)
def _fixed(x: int, N: int) -> np.ndarray:
    return _frozen(build_R(x, N))


def _h_all(k: int) -> np.ndarray:
    return kron_all([HADAMARD] * k)


def _index_from(bits: Sequence[int], N: int) -> int:
    return SetIndex.from_bits(bits, N).x


# --------------------------------------------------------------- layouts

def receiver_labels(cfg: ProtocolConfig) -> tuple[str, ...]:
    if cfg.family == CONTROLLED_1Q:
        return (UNKNOWN_QUBIT[(cfg.roles or CONTROLLED_ROLES)[2]],)
    if cfg.family == COMBINED_1Q:
        return (UNKNOWN_QUBIT[(cfg.roles or COMBINED_ROLES)[2]],)
    return tuple(f"Y{m}" for m in range(1, cfg.N + 1))


def unknown_state(cfg: ProtocolConfig) -> StateVector:
    labels = receiver_labels(cfg)
    if cfg.unknown_state is not None:
        return from_amplitudes(labels, cfg.unknown_state)
    return make_random_state(labels, cfg.state_seed)


def oracle(cfg: ProtocolConfig) -> StateVector:
    """Target operator (or ordered product) applied straight to the unknown state."""
    xi = unknown_state(cfg)
    out = apply_local(cfg.op.matrix(), xi.labels, xi)
    if cfg.op2 is not None:
        out = apply_local(cfg.op2.matrix(), xi.labels, out)
    return out


# --------------------------------------------------------------- builders

@dataclass
class Plan:
    parties: dict[str, tuple[str, ...]]
    initial: StateVector
    steps: list


def _controlled_1q(cfg: ProtocolConfig, xi: StateVector) -> Plan:
    ctrl, snd, rcv = cfg.roles or CONTROLLED_ROLES
    qc, qs, qr = GHZ_QUBIT[ctrl], GHZ_QUBIT[snd], GHZ_QUBIT[rcv]
    y = UNKNOWN_QUBIT[rcv]
    initial = make_ghz(("A", "B", "C")).kron(xi)
    parties = {ctrl: (qc,), snd: (qs,), rcv: (qr, y)}
    d = cfg.op.d
    v = cfg.variant
    started = not cfg.skip_startup
    told = started and not cfg.withhold_password
    holder = snd if v == 1 else rcv

    def pw(view: PartyView) -> int:
        return view.read("password")[0]

    steps: list = []
    if started:
        steps += [Gate(ctrl, "H", (qc,), HADAMARD), Measure(ctrl, qc)]
    if told:
        steps.append(Send(ctrl, holder, "password", lambda w: (w.outcome(qc),)))
    if told and v == 2:
        steps.append(Gate(rcv, "r(gamma)", (qr,), lambda w: r_gate(pw(w))))
    steps += [Gate(rcv, "CNOT", (y, qr), CNOT), Measure(rcv, qr)]
    if told and v == 3:
        steps.append(Gate(rcv, "r(gamma)r(gamma)", (qr, y), lambda w: np.kron(r_gate(pw(w)), r_gate(pw(w)))))
    steps.append(Send(rcv, snd, "beta", lambda w: (w.outcome(qr),)))
    if told and v == 1:
        steps.append(Gate(snd, "r(gamma)", (qs,), lambda w: r_gate(pw(w))))
    steps += [
        Gate(snd, "sigma(beta)", (qs,), lambda w: _sig(w.read("beta")[0])),
        Gate(snd, "U(d,u)", (qs,), cfg.op.matrix()),
        Gate(snd, "H", (qs,), HADAMARD),
        Measure(snd, qs),
        Send(snd, rcv, "alpha+d", lambda w: (w.outcome(qs), d)),
        Gate(rcv, "r(alpha)sigma(d)", (y,), lambda w: r_gate(w.read("alpha+d")[0]) @ _sig(w.read("alpha+d")[1])),
    ]
    if told and v == 4:
        def r_aft(w: PartyView) -> np.ndarray:
            g, dd = pw(w), w.read("alpha+d")[1]
            return (-1) ** (g * dd) * np.kron(r_gate(g), r_gate(g))

        steps.append(Gate(rcv, "R_aft", (qr, y), r_aft))
    return Plan(parties, initial, steps)


def _combined_1q(cfg: ProtocolConfig, xi: StateVector) -> Plan:
    s1, s2, rcv = cfg.roles or COMBINED_ROLES
    q1, q2, qr = GHZ_QUBIT[s1], GHZ_QUBIT[s2], GHZ_QUBIT[rcv]
    z = UNKNOWN_QUBIT[rcv]
    initial = make_ghz(("A", "B", "C")).kron(xi)
    parties = {s1: (q1,), s2: (q2,), rcv: (qr, z)}
    d1, d2 = cfg.op.d, cfg.op2.d

    def recover(w: PartyView) -> np.ndarray:
        a, dd1 = w.read("a+d1")
        b, dd2 = w.read("b+d2")
        return r_gate(b) @ _sig(dd2) @ r_gate(a) @ _sig(dd1)

    steps = [
        Gate(rcv, "CNOT", (z, qr), CNOT),
        Measure(rcv, qr),
        Send(rcv, s1, "c", lambda w: (w.outcome(qr),)),
        Send(rcv, s2, "c", lambda w: (w.outcome(qr),)),
        Gate(s1, "sigma(c)", (q1,), lambda w: _sig(w.read("c")[0])),
        Gate(s1, "U(d1,u)", (q1,), cfg.op.matrix()),
        Gate(s1, "H", (q1,), HADAMARD),
        Measure(s1, q1),
        Send(s1, rcv, "a+d1", lambda w: (w.outcome(q1), d1)),
        Send(s1, s2, "d1", lambda w: (d1,)),
        Gate(s2, "sigma(d1)sigma(c)", (q2,), lambda w: _sig(w.read("d1")[0]) @ _sig(w.read("c")[0])),
        Gate(s2, "U(d2,v)", (q2,), cfg.op2.matrix()),
        Gate(s2, "H", (q2,), HADAMARD),
        Measure(s2, q2),
        Send(s2, rcv, "b+d2", lambda w: (w.outcome(q2), d2)),
        Gate(rcv, "r(b)sigma(d2)r(a)sigma(d1)", (z,), recover),
    ]
    return Plan(parties, initial, steps)


def controlled_nq_layout(N: int, n: int) -> tuple[str, ...]:
    labels: list[str] = []
    for m in range(1, N + 1):
        labels += [f"A{m}", f"B{m}"] + ([f"C{m}"] if m <= n else [])
    return tuple(labels) + tuple(f"Y{m}" for m in range(1, N + 1))


def _controlled_nq(cfg: ProtocolConfig, xi: StateVector) -> Plan:
    N, n, v = cfg.N, cfg.n, cfg.variant
    A = tuple(f"A{m}" for m in range(1, N + 1))
    B = tuple(f"B{m}" for m in range(1, N + 1))
    C = tuple(f"C{m}" for m in range(1, n + 1))
    Y = tuple(f"Y{m}" for m in range(1, N + 1))
    chans = [make_ghz((A[m], B[m], C[m])) if m < n else make_bell((A[m], B[m])) for m in range(N)]
    initial = tensor_all(chans + [xi])
    parties = {"Alice": A, "Bob": B + Y}
    if n:
        parties["Charlie"] = C
    T = cfg.op.matrix()
    started = n > 0 and not cfg.skip_startup
    told = started and not cfg.withhold_password
    holder = "Alice" if v == 1 else "Bob"

    def pw(view: PartyView) -> tuple[int, ...]:
        return view.read("password")

    steps: list = []
    if started:
        for c in C:
            steps += [Gate("Charlie", "H", (c,), HADAMARD), Measure("Charlie", c)]
    if told:
        steps.append(Send("Charlie", holder, "password", lambda view: view.outcomes(C)))
    if told and v == 2:
        steps.append(Gate("Bob", "r(c)", B[:n], lambda view: _r_all(pw(view))))
    for m in range(N):
        steps += [Gate("Bob", "CNOT", (Y[m], B[m]), CNOT), Measure("Bob", B[m])]
    steps.append(Send("Bob", "Alice", "b", lambda view: view.outcomes(B)))
    if told and v == 1:
        steps.append(Gate("Alice", "r(c)", A[:n], lambda view: _r_all(pw(view))))
    steps += [
        Gate("Alice", "sigma(b)", A, lambda view: _sig_all(view.read("b"))),
        Gate("Alice", "T(x,t)", A, T),
        Gate("Alice", "H", A, _h_all(N)),
    ]
    steps += [Measure("Alice", a) for a in A]
    steps.append(Send("Alice", "Bob", "a+x", lambda view: view.outcomes(A) + cfg.op.bits()))
    if told and v == 3:
        steps.append(
            Gate("Bob", "r(c)r(c)", B[:n] + Y[:n], lambda view: _r_all(pw(view) * 2))
        )

    def recover(view: PartyView) -> np.ndarray:
        msg = view.read("a+x")
        a, x = msg[:N], _index_from(msg[N:], N)
        return _r_all(a) @ _fixed(x, N)

    steps.append(Gate("Bob", "r(a)R(x)", Y, recover))
    if told and v == 4:
        def r_aft(view: PartyView) -> np.ndarray:
            R = _fixed(_index_from(view.read("a+x")[N:], N), N)
            inner = _r_all(pw(view) + (0,) * (N - n))
            return R @ inner @ R.conj().T

        steps += [
            Gate("Bob", "r(c)", B[:n], lambda view: _r_all(pw(view))),
            Gate("Bob", "R(x)r(c)R(x)^+", Y, r_aft),
        ]
    return Plan(parties, initial, steps)


def combined_nq_layout(N: int) -> tuple[str, ...]:
    labels: list[str] = []
    for m in range(1, N + 1):
        labels += [f"A{m}", f"B{m}", f"C{m}"]
    return tuple(labels) + tuple(f"Y{m}" for m in range(1, N + 1))


def _combined_nq(cfg: ProtocolConfig, xi: StateVector, placement: str) -> Plan:
    N = cfg.N
    A = tuple(f"A{m}" for m in range(1, N + 1))
    B = tuple(f"B{m}" for m in range(1, N + 1))
    C = tuple(f"C{m}" for m in range(1, N + 1))
    Y = tuple(f"Y{m}" for m in range(1, N + 1))
    initial = tensor_all([make_ghz((A[m], B[m], C[m])) for m in range(N)] + [xi])
    parties = {"Alice": A, "Bob": B + Y, "Charlie": C}
    T1, T2 = cfg.op.matrix(), cfg.op2.matrix()
    derived = placement == "derived"

    steps: list = []
    for m in range(N):
        steps += [Gate("Bob", "CNOT", (Y[m], B[m]), CNOT), Measure("Bob", B[m])]
    steps += [
        Send("Bob", "Alice", "b", lambda view: view.outcomes(B)),
        Send("Bob", "Charlie", "b", lambda view: view.outcomes(B)),
        Gate("Alice", "sigma(b)", A, lambda view: _sig_all(view.read("b"))),
        Gate("Alice", "T(x,u)", A, T1),
        Gate("Alice", "H", A, _h_all(N)),
    ]
    steps += [Measure("Alice", a) for a in A]
    steps += [
        Send("Alice", "Bob", "a+x", lambda view: view.outcomes(A) + cfg.op.bits()),
        Send("Alice", "Charlie", "x", lambda view: cfg.op.bits()),
    ]
    if derived:
        steps.append(Gate("Charlie", "sigma(b)", C, lambda view: _sig_all(view.read("b"))))
    steps += [
        Gate("Charlie", "T(y,v)R(x)", C, lambda view: T2 @ _fixed(_index_from(view.read("x"), N), N)),
        Gate("Charlie", "H", C, _h_all(N)),
    ]
    steps += [Measure("Charlie", c) for c in C]
    steps.append(Send("Charlie", "Bob", "c+y", lambda view: view.outcomes(C) + cfg.op2.bits()))

    def recover(view: PartyView) -> np.ndarray:
        ax, cy = view.read("a+x"), view.read("c+y")
        a, x = ax[:N], _index_from(ax[N:], N)
        c, yy = cy[:N], _index_from(cy[N:], N)
        out = _r_all(c) @ _fixed(yy, N) @ _r_all(a) @ _fixed(x, N)
        if not derived:
            out = out @ _sig_all(view.outcomes(B))
        return out

    steps.append(Gate("Bob", "r(c)R(y)r(a)R(x)" + ("" if derived else "sigma(b)"), Y, recover))
    return Plan(parties, initial, steps)


def build_plan(cfg: ProtocolConfig, placement: Optional[str] = None, xi: Optional[StateVector] = None) -> Plan:
    """Initial register and step list.  ``xi`` overrides the unknown input;
    it must start with the receiver labels and may carry extra untouched
    qubits after them (a reference register, for instance)."""
    if xi is None:
        xi = unknown_state(cfg)
    if xi.labels[: cfg.N] != receiver_labels(cfg):
        raise ValueError(f"input register must start with {receiver_labels(cfg)}")
    if cfg.family == CONTROLLED_1Q:
        return _controlled_1q(cfg, xi)
    if cfg.family == COMBINED_1Q:
        return _combined_1q(cfg, xi)
    if cfg.family == CONTROLLED_NQ:
        return _controlled_nq(cfg, xi)
    p = placement or cfg.placement
    return _combined_nq(cfg, xi, "derived" if p == "derived" else "literal")


def build_engine(cfg: ProtocolConfig, placement: Optional[str] = None, xi: Optional[StateVector] = None) -> Engine:
    plan = build_plan(cfg, placement, xi)
    return Engine(plan.parties, plan.steps, plan.initial)


def measurement_order(cfg: ProtocolConfig) -> tuple[str, ...]:
    return build_engine(cfg).measurement_order


# --------------------------------------------------------------- results

@dataclass
class ProtocolResult:
    config: ProtocolConfig
    outcomes: dict[str, int]
    transcript: tuple
    final_state: StateVector
    receiver_state: Optional[StateVector]
    oracle_state: StateVector
    fidelity: float
    branch_probability: float
    substitutions: list[dict] = field(default_factory=list)

    @property
    def messages(self) -> list[ClassicalMessage]:
        return [e for e in self.transcript if isinstance(e, ClassicalMessage)]

    @property
    def ok(self) -> bool:
        return self.fidelity >= 1 - FIDELITY_TOL

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "family": cfg.family,
            "N": cfg.N,
            "n": cfg.n,
            "variant": cfg.variant if cfg.controlled else None,
            "x": cfg.op.x,
            "y": cfg.op2.x if cfg.op2 is not None else None,
            "outcomes": dict(self.outcomes),
            "branch_probability": self.branch_probability,
            "fidelity": self.fidelity,
            "messages": [m.to_dict() for m in self.messages],
            "substitutions": list(self.substitutions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _finish(cfg: ProtocolConfig, br: Branch, target: StateVector) -> ProtocolResult:
    keep = target.labels
    state = br.state
    recv = None
    if set(state.labels) == set(keep) | set(br.outcomes):
        try:
            recv = extract_factor(state, keep, br.outcomes)
        except NonProductError:
            recv = None
    if recv is not None:
        fid = fidelity_up_to_phase(recv, target)
    else:
        # unmeasured or entangled leftovers: condition on outcomes, trace the rest
        fid = reduced_fidelity(state, keep, br.outcomes, target)
    return ProtocolResult(
        config=cfg,
        outcomes=dict(br.outcomes),
        transcript=tuple(br.events),
        final_state=state,
        receiver_state=recv,
        oracle_state=target,
        fidelity=fid,
        branch_probability=br.probability,
    )


def _mode(cfg: ProtocolConfig) -> OutcomeMode:
    return OutcomeMode(cfg.outcome_mode, cfg.fixed_bits, cfg.sample_seed)


def run_all(cfg: ProtocolConfig) -> list[ProtocolResult]:
    """Every family, always as a list (one entry outside ``all`` mode)."""
    target = oracle(cfg)
    results = [_finish(cfg, br, target) for br in build_engine(cfg).run(_mode(cfg))]
    if cfg.family == COMBINED_NQ and cfg.placement == "fallback":
        results = _fallback(cfg, results, target)
    return results


def _fallback(cfg: ProtocolConfig, results: list[ProtocolResult], target: StateVector) -> list[ProtocolResult]:
    failing = [i for i, r in enumerate(results) if not r.ok]
    if not failing:
        return results
    eng = build_engine(cfg, "derived")
    order = eng.measurement_order
    if cfg.outcome_mode == "all":
        # one derived tree serves every failing branch
        derived = {tuple(br.outcomes[lab] for lab in order): br for br in eng.run(OutcomeMode("all"))}
    out = list(results)
    for i in failing:
        lit = results[i]
        bits = tuple(lit.outcomes[lab] for lab in order)
        br = derived[bits] if cfg.outcome_mode == "all" else eng.run(OutcomeMode("fixed", bits))[0]
        fixed = _finish(cfg, br, target)
        fixed.substitutions.append({
            "step": "Bob recovery / Charlie sending",
            "literal": "sigma(b) on Y inside Bob's recovery",
            "applied": "sigma(b) on C before Charlie's T(y,v)R(x)",
            "literal_fidelity": lit.fidelity,
        })
        out[i] = fixed
    return out


def _single_or_list(cfg: ProtocolConfig, res: list[ProtocolResult]):
    return res if cfg.outcome_mode == "all" else res[0]


def _require(cfg: ProtocolConfig, family: str):
    if cfg.family != family:
        raise ValueError(f"config is for {cfg.family}, not {family}")


def run_controlled_1q(cfg: ProtocolConfig):
    _require(cfg, CONTROLLED_1Q)
    return _single_or_list(cfg, run_all(cfg))


def run_combined_1q(cfg: ProtocolConfig):
    _require(cfg, COMBINED_1Q)
    return _single_or_list(cfg, run_all(cfg))


def run_controlled_nq(cfg: ProtocolConfig):
    _require(cfg, CONTROLLED_NQ)
    return _single_or_list(cfg, run_all(cfg))


def run_combined_nq(cfg: ProtocolConfig):
    _require(cfg, COMBINED_NQ)
    return _single_or_list(cfg, run_all(cfg))


def quantum_ops(result: ProtocolResult) -> list[QuantumOpEvent]:
    return [e for e in result.transcript if isinstance(e, QuantumOpEvent)]


def measurements(result: ProtocolResult) -> list[MeasurementEvent]:
    return [e for e in result.transcript if isinstance(e, MeasurementEvent)]


__all__ = [
    "FIDELITY_TOL",
    "OpSpec",
    "ProtocolResult",
    "build_engine",
    "build_plan",
    "combined_nq_layout",
    "controlled_nq_layout",
    "measurement_order",
    "oracle",
    "receiver_labels",
    "run_all",
    "run_combined_1q",
    "run_combined_nq",
    "run_controlled_1q",
    "run_controlled_nq",
    "unknown_state",
]
