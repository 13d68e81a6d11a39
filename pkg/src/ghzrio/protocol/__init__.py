"""Executable remote-implementation protocols over GHZ and Bell channels."""
from __future__ import annotations

from .audit import AuditReport, ExpectedMessage, audit_bits, expected_schedule
from .batch import BatchEvaluation, BranchOperator, branch_operators, evaluate
from .config import (
    COMBINED_1Q,
    COMBINED_NQ,
    CONTROLLED_1Q,
    CONTROLLED_NQ,
    FAMILIES,
    MAX_N,
    OpSpec,
    ProtocolConfig,
    config_from_dict,
    config_to_dict,
)
from .engine import (
    CausalityError,
    ClassicalMessage,
    Engine,
    Gate,
    LoccViolation,
    Measure,
    MeasurementEvent,
    OutcomeMode,
    QuantumOpEvent,
    Send,
)
from .families import (
    FIDELITY_TOL,
    ProtocolResult,
    build_engine,
    build_plan,
    combined_nq_layout,
    controlled_nq_layout,
    measurement_order,
    measurements,
    oracle,
    quantum_ops,
    receiver_labels,
    run_all,
    run_combined_1q,
    run_combined_nq,
    run_controlled_1q,
    run_controlled_nq,
    unknown_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
