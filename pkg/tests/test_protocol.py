from __future__ import annotations

import json

import numpy as np
import pytest

from ghzrio.protocol import (
    COMBINED_1Q,
    COMBINED_NQ,
    CONTROLLED_1Q,
    CONTROLLED_NQ,
    CausalityError,
    OpSpec,
    ProtocolConfig,
    branch_operators,
    build_plan,
    config_from_dict,
    config_to_dict,
    evaluate,
    measurement_order,
    measurements,
    oracle,
    quantum_ops,
    run_all,
    run_combined_1q,
    run_combined_nq,
    run_controlled_1q,
    run_controlled_nq,
)
from ghzrio.qstate import fidelity_up_to_phase, from_amplitudes
from ghzrio.restricted import build_T, set_count

TOL = 1e-9
ONE = (1, 1)


def _phases(rng, N):
    return tuple(np.exp(1j * rng.uniform(0, 2 * np.pi, 2**N)))


def _state(rng, N):
    z = rng.standard_normal(2**N) + 1j * rng.standard_normal(2**N)
    return tuple(z / np.linalg.norm(z))


def _assert_faithful(results, n_branches):
    assert len(results) == n_branches
    assert min(r.fidelity for r in results) >= 1 - TOL
    assert sum(r.branch_probability for r in results) == pytest.approx(1.0, abs=1e-10)


# ------------------------------------------------------------ one qubit


def test_controlled_1q_identity():
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(0, ONE), unknown_state=(0.6, 0.8j))
    res = run_controlled_1q(cfg)
    _assert_faithful(res, 8)
    for r in res:
        assert fidelity_up_to_phase(r.receiver_state, from_amplitudes(["Y"], (0.6, 0.8j))) == pytest.approx(1.0)


def test_controlled_1q_not_gate():
    y = (0.6, 0.8j)
    res = run_controlled_1q(ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, ONE), unknown_state=y))
    for r in res:
        assert fidelity_up_to_phase(r.receiver_state, from_amplitudes(["Y"], (y[1], y[0]))) == pytest.approx(1.0)


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
@pytest.mark.parametrize("d", [0, 1])
def test_controlled_1q_random(variant, d):
    rng = np.random.default_rng(10 * variant + d)
    for _ in range(3):
        cfg = ProtocolConfig(
            CONTROLLED_1Q, OpSpec.one_qubit(d, _phases(rng, 1)), variant=variant, unknown_state=_state(rng, 1)
        )
        res = run_controlled_1q(cfg)
        _assert_faithful(res, 8)
        for r in res:
            assert r.branch_probability == pytest.approx(1 / 8, abs=1e-12)
            # unnormalized branch amplitude carries 1/(2 sqrt 2)
            assert np.sqrt(r.final_state.norm_sq()) == pytest.approx(1 / (2 * np.sqrt(2)))
            assert [m.width for m in r.messages] == [1, 1, 2]


def test_controlled_1q_oracle_not():
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, ONE), unknown_state=(0.6, 0.8))
    assert np.allclose(oracle(cfg).amps, [0.8, 0.6])


def test_password_routing():
    op = OpSpec.one_qubit(1, ONE)
    to = {}
    for v in (1, 2, 3, 4):
        r = run_controlled_1q(ProtocolConfig(CONTROLLED_1Q, op, variant=v, outcome_mode="fixed", fixed_bits=(1, 0, 1)))
        to[v] = r.messages[0].receiver
        assert r.messages[0].tag == "password"
    assert to == {1: "Alice", 2: "Bob", 3: "Bob", 4: "Bob"}


@pytest.mark.parametrize("roles", [("Alice", "Bob", "Charlie"), ("Bob", "Charlie", "Alice")])
def test_controlled_1q_role_rotation(roles):
    rng = np.random.default_rng(5)
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, _phases(rng, 1)), roles=roles)
    res = run_controlled_1q(cfg)
    _assert_faithful(res, 8)
    assert res[0].messages[0].sender == roles[0]
    assert res[0].receiver_state.labels == ({"Alice": "X", "Bob": "Y", "Charlie": "Z"}[roles[2]],)


def test_combined_1q_identity_and_double_not():
    z = (0.6, 0.8j)
    for d in (0, 1):
        cfg = ProtocolConfig(COMBINED_1Q, OpSpec.one_qubit(d, ONE), OpSpec.one_qubit(d, ONE), unknown_state=z)
        res = run_combined_1q(cfg)
        _assert_faithful(res, 8)
        for r in res:
            assert fidelity_up_to_phase(r.receiver_state, from_amplitudes(["Z"], z)) == pytest.approx(1.0)


@pytest.mark.parametrize("d1, d2", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_combined_1q_random(d1, d2):
    rng = np.random.default_rng(d1 * 2 + d2)
    u, v = _phases(rng, 1), _phases(rng, 1)
    cfg = ProtocolConfig(
        COMBINED_1Q, OpSpec.one_qubit(d1, u), OpSpec.one_qubit(d2, v), unknown_state=_state(rng, 1)
    )
    res = run_combined_1q(cfg)
    _assert_faithful(res, 8)
    want = build_T(d2 + 1, v) @ build_T(d1 + 1, u) @ np.array(cfg.unknown_state)
    assert np.allclose(oracle(cfg).amps, want)
    for r in res:
        assert np.sqrt(r.final_state.norm_sq()) == pytest.approx(1 / (2 * np.sqrt(2)))
        sched = [(m.sender, m.receiver, m.tag, m.width) for m in r.messages]
        assert sched == [
            ("Charlie", "Alice", "c", 1),
            ("Charlie", "Bob", "c", 1),
            ("Alice", "Charlie", "a+d1", 2),
            ("Alice", "Bob", "d1", 1),
            ("Bob", "Charlie", "b+d2", 2),
        ]


# ------------------------------------------------------------ N qubits


def test_controlled_nq_identity_bell_only():
    cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(1, (1,) * 4), N=2, n=0, state_seed=3)
    _assert_faithful(run_controlled_nq(cfg), 16)


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_controlled_nq_all_x_n2(variant):
    rng = np.random.default_rng(variant)
    for x in range(1, set_count(2) + 1):
        cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(x, _phases(rng, 2)), N=2, n=2, variant=variant,
                             unknown_state=_state(rng, 2))
        _assert_faithful(run_controlled_nq(cfg), 64)


def test_controlled_nq_oracle_x7():
    rng = np.random.default_rng(7)
    t, xi = _phases(rng, 2), _state(rng, 2)
    cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(7, t), N=2, n=1, unknown_state=xi)
    assert np.allclose(oracle(cfg).amps, build_T(7, t) @ np.array(xi))


@pytest.mark.parametrize("N, n", [(1, 0), (1, 1), (2, 1), (3, 2)])
def test_controlled_nq_preparation_prefactor(N, n):
    # after Bob's last measurement the branch weight is 2^-(N+n)
    cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(1, (1,) * 2**N), N=N, n=n, outcome_mode="fixed",
                         fixed_bits=(0,) * (n + 2 * N))
    r = run_controlled_nq(cfg)
    last_b = [m for m in measurements(r) if m.label.startswith("B")][-1]
    assert last_b.branch_probability == pytest.approx(2.0 ** -(N + n))


@pytest.mark.parametrize("N, n", [(2, 0), (2, 1), (2, 2), (3, 1)])
def test_controlled_nq_message_widths(N, n):
    w = {1: 2, 2: 5, 3: 16}[N]
    cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(set_count(N), (1,) * 2**N), N=N, n=n, outcome_mode="sample")
    r = run_controlled_nq(cfg)
    widths = [m.width for m in r.messages]
    assert widths == ([n] if n else []) + [N, N + w]
    # x travels big-endian in the last w bits
    assert int("".join(map(str, r.messages[-1].payload[N:])), 2) == set_count(N)


def test_variant_equivalence_branchwise():
    rng = np.random.default_rng(11)
    base = ProtocolConfig(CONTROLLED_NQ, OpSpec(9, _phases(rng, 2)), N=2, n=2, unknown_state=_state(rng, 2))
    ref = {tuple(r.outcomes.items()): r.receiver_state for r in run_all(base)}
    for v in (2, 3, 4):
        for r in run_all(base.with_(variant=v)):
            assert fidelity_up_to_phase(r.receiver_state, ref[tuple(r.outcomes.items())]) == pytest.approx(1.0, abs=1e-12)


def test_combined_nq_identity():
    cfg = ProtocolConfig(COMBINED_NQ, OpSpec(1, (1,) * 4), OpSpec(1, (1,) * 4), N=2)
    res = run_combined_nq(cfg)
    _assert_faithful(res, 64)
    # the literal placement survives exactly the b = 00 branches
    for r in res:
        assert bool(r.substitutions) == (r.outcomes["B1"] or r.outcomes["B2"])


def test_combined_nq_random_n2():
    rng = np.random.default_rng(2)
    u, v, xi = _phases(rng, 2), _phases(rng, 2), _state(rng, 2)
    cfg = ProtocolConfig(COMBINED_NQ, OpSpec(5, u), OpSpec(17, v), N=2, unknown_state=xi)
    res = run_combined_nq(cfg)
    _assert_faithful(res, 64)
    assert np.allclose(oracle(cfg).amps, build_T(17, v) @ build_T(5, u) @ np.array(xi))
    assert [m.width for m in res[0].messages] == [2, 2, 7, 5, 7]
    assert [(m.sender, m.receiver) for m in res[0].messages] == [
        ("Bob", "Alice"), ("Bob", "Charlie"), ("Alice", "Bob"), ("Alice", "Charlie"), ("Charlie", "Bob"),
    ]


def test_combined_nq_placements():
    rng = np.random.default_rng(4)
    cfg = ProtocolConfig(COMBINED_NQ, OpSpec(2, _phases(rng, 1)), OpSpec(2, _phases(rng, 1)), N=1,
                         unknown_state=_state(rng, 1))
    literal = run_all(cfg.with_(placement="literal"))
    derived = run_all(cfg.with_(placement="derived"))
    assert min(r.fidelity for r in derived) >= 1 - TOL
    # the literal placement only survives the b = 0 branches
    bad = {r.outcomes["B1"] for r in literal if not r.ok}
    assert bad == {1}
    fb = run_all(cfg)
    assert min(r.fidelity for r in fb) >= 1 - TOL
    subs = [r for r in fb if r.substitutions]
    assert len(subs) == sum(not r.ok for r in literal)
    assert all(s.substitutions[0]["literal_fidelity"] < 1 - TOL for s in subs)


# ------------------------------------------------------------ cross engines


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_controlled_nq_reduces_to_1q(variant):
    rng = np.random.default_rng(variant + 40)
    op, xi = OpSpec.one_qubit(1, _phases(rng, 1)), _state(rng, 1)
    one = run_all(ProtocolConfig(CONTROLLED_1Q, op, variant=variant, unknown_state=xi))
    nq = run_all(ProtocolConfig(CONTROLLED_NQ, op, N=1, n=1, variant=variant, unknown_state=xi))
    by = {(r.outcomes["C1"], r.outcomes["B1"], r.outcomes["A1"]): r for r in nq}
    assert len(one) == len(nq) == 8
    for r in one:
        s = by[(r.outcomes["C"], r.outcomes["B"], r.outcomes["A"])]
        assert s.branch_probability == pytest.approx(r.branch_probability, abs=1e-12)
        assert abs(np.vdot(s.receiver_state.amps, r.receiver_state.amps)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_combined_nq_reduces_to_1q():
    rng = np.random.default_rng(8)
    a, b, z = OpSpec.one_qubit(1, _phases(rng, 1)), OpSpec.one_qubit(0, _phases(rng, 1)), _state(rng, 1)
    # Bob receives in the N-qubit protocol, so rotate the one-qubit roles to match
    one = run_all(ProtocolConfig(COMBINED_1Q, a, b, roles=("Alice", "Charlie", "Bob"), unknown_state=z))
    nq = run_all(ProtocolConfig(COMBINED_NQ, a, b, N=1, unknown_state=z))
    by = {(r.outcomes["B1"], r.outcomes["A1"], r.outcomes["C1"]): r for r in nq}
    for r in one:
        s = by[(r.outcomes["B"], r.outcomes["A"], r.outcomes["C"])]
        assert abs(np.vdot(s.receiver_state.amps, r.receiver_state.amps)) ** 2 == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------ modes and plumbing


def test_fixed_and_sample_modes():
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, ONE), outcome_mode="fixed", fixed_bits=(1, 1, 0))
    r = run_controlled_1q(cfg)
    assert r.outcomes == {"C": 1, "B": 1, "A": 0}
    assert r.ok
    s1 = run_controlled_1q(cfg.with_(outcome_mode="sample", fixed_bits=(), sample_seed=9))
    s2 = run_controlled_1q(cfg.with_(outcome_mode="sample", fixed_bits=(), sample_seed=9))
    assert s1.outcomes == s2.outcomes and s1.ok


def test_wrong_runner_rejected():
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(0, ONE))
    with pytest.raises(ValueError, match="not combined1q"):
        run_combined_1q(cfg)


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(family=CONTROLLED_NQ, op=OpSpec(1, (1,) * 2), N=5), "outside"),
        (dict(family=CONTROLLED_1Q, op=OpSpec(1, (1,) * 4), N=2), "one qubit"),
        (dict(family=COMBINED_NQ, op=OpSpec(1, (1,) * 2)), "two operator"),
        (dict(family=CONTROLLED_NQ, op=OpSpec(1, (1,) * 2), n=2), "controller count"),
        (dict(family=CONTROLLED_1Q, op=OpSpec(1, (1,) * 2), variant=5), "variant"),
        (dict(family=CONTROLLED_1Q, op=OpSpec(1, (1,) * 2), roles=("Alice", "Alice", "Bob")), "permutation"),
        (dict(family=CONTROLLED_NQ, op=OpSpec(1, (1,) * 2), roles=("Alice", "Bob", "Charlie")), "one-qubit"),
        (dict(family=CONTROLLED_1Q, op=OpSpec(1, (1,) * 2), unknown_state=(1, 0, 0)), "amplitudes"),
        (dict(family="teleport", op=OpSpec(1, (1,) * 2)), "family"),
    ],
)
def test_config_validation(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        ProtocolConfig(**kwargs)


def test_opspec_validation():
    with pytest.raises(ValueError, match="unit-modulus"):
        OpSpec(1, (1, 2))
    with pytest.raises(ValueError, match="2\\^N"):
        OpSpec(1, (1, 1, 1))
    with pytest.raises(ValueError):
        OpSpec(3, (1, 1))
    with pytest.raises(ValueError):
        OpSpec.one_qubit(2, ONE)
    assert OpSpec.one_qubit(1, ONE).d == 1


def test_config_roundtrip():
    rng = np.random.default_rng(0)
    cfg = ProtocolConfig(COMBINED_NQ, OpSpec(3, _phases(rng, 2)), OpSpec(4, _phases(rng, 2)), N=2,
                         unknown_state=_state(rng, 2), placement="derived")
    doc = json.loads(json.dumps(config_to_dict(cfg)))
    assert config_from_dict(doc) == cfg


def test_result_serialization():
    r = run_controlled_1q(ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, ONE), outcome_mode="sample"))
    doc = json.loads(r.to_json())
    assert set(doc) == {"family", "N", "n", "variant", "x", "y", "outcomes", "branch_probability",
                        "fidelity", "messages", "substitutions"}
    assert [m["width"] for m in doc["messages"]] == [1, 1, 2]
    assert quantum_ops(r) and len(measurements(r)) == 3


def test_causality_in_plans():
    # every message is sent after the measurements it reports
    cfg = ProtocolConfig(COMBINED_NQ, OpSpec(2, (1,) * 4), OpSpec(3, (1,) * 4), N=2)
    plan = build_plan(cfg)
    assert set(measurement_order(cfg)) == {f"{p}{m}" for p in "ABC" for m in (1, 2)}
    assert set(plan.parties) == {"Alice", "Bob", "Charlie"}


def test_plan_rejects_bad_state():
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(0, ONE))
    with pytest.raises(ValueError):
        build_plan(cfg, xi=from_amplitudes(["Z"], (1, 0)))


# ------------------------------------------------------------ negative controls


@pytest.mark.parametrize("family, n", [(CONTROLLED_1Q, 1), (CONTROLLED_NQ, 1), (CONTROLLED_NQ, 2)])
def test_skip_startup_breaks_channel(family, n):
    rng = np.random.default_rng(3)
    N = 1 if family == CONTROLLED_1Q else 2
    x = 2 if N == 1 else 11
    cfg = ProtocolConfig(family, OpSpec(x, _phases(rng, N)), N=N, n=n, unknown_state=_state(rng, N),
                         skip_startup=True)
    res = run_all(cfg)
    assert min(r.fidelity for r in res) < 1 - 1e-3


@pytest.mark.parametrize("variant", [1, 2, 3, 4])
def test_withheld_password_breaks_channel(variant):
    rng = np.random.default_rng(variant)
    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, _phases(rng, 1)), variant=variant,
                         unknown_state=_state(rng, 1), withhold_password=True)
    res = run_all(cfg)
    assert min(r.fidelity for r in res) < 1 - 1e-3
    assert all(m.tag != "password" for m in res[0].messages)


def test_causality_error_surfaces():
    # a plan that reads a message before it is sent must fail structurally
    from ghzrio.protocol import Engine, Gate, Send

    cfg = ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(0, ONE))
    plan = build_plan(cfg)
    steps = list(plan.steps)
    i = next(k for k, s in enumerate(steps) if isinstance(s, Send) and s.tag == "alpha+d")
    j = next(k for k, s in enumerate(steps) if isinstance(s, Gate) and callable(s.matrix) and k > i)
    steps[i], steps[j] = steps[j], steps[i]
    with pytest.raises(CausalityError):
        Engine(plan.parties, steps, plan.initial).run()


# ------------------------------------------------------------ batched evaluation


@pytest.mark.parametrize(
    "cfg",
    [
        ProtocolConfig(CONTROLLED_1Q, OpSpec.one_qubit(1, np.exp(1j * np.array([0.4, 2.0]))), variant=4),
        ProtocolConfig(COMBINED_1Q, OpSpec.one_qubit(1, np.exp(1j * np.array([0.4, 2.0]))),
                       OpSpec.one_qubit(0, np.exp(1j * np.array([1.0, -0.3])))),
        ProtocolConfig(CONTROLLED_NQ, OpSpec(13, np.exp(1j * np.arange(4))), N=2, n=1, variant=3),
        ProtocolConfig(COMBINED_NQ, OpSpec(2, np.exp(1j * np.array([0.1, 0.9]))),
                       OpSpec(2, np.exp(1j * np.array([1.1, 0.2]))), N=1),
    ],
    ids=lambda c: c.family,
)
def test_batch_matches_direct_runs(cfg):
    rng = np.random.default_rng(0)
    states = np.array([_state(rng, cfg.N) for _ in range(3)])
    ev = evaluate(cfg, states)
    for k, s in enumerate(states):
        direct = run_all(cfg.with_(unknown_state=tuple(s)))
        assert [r.outcomes for r in direct] == ev.outcomes
        assert np.allclose([r.branch_probability for r in direct], ev.probability[:, k], atol=1e-12)
        assert np.allclose([r.fidelity for r in direct], ev.fidelity[:, k], atol=1e-12)


def test_branch_operators_are_scaled_unitaries():
    cfg = ProtocolConfig(CONTROLLED_NQ, OpSpec(20, np.exp(1j * np.arange(4))), N=2, n=2)
    V = cfg.op.matrix()
    for op in branch_operators(cfg):
        assert op.process_fidelity(V) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(op.kraus.conj().T @ op.kraus, np.eye(4) / 64)
