"""Run configuration for the four protocol families."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..restricted import PHASE_TOL, SetIndex, build_R, build_T

CONTROLLED_1Q = "controlled1q"
COMBINED_1Q = "combined1q"
CONTROLLED_NQ = "controlled-nq"
COMBINED_NQ = "combined-nq"
FAMILIES = (CONTROLLED_1Q, COMBINED_1Q, CONTROLLED_NQ, COMBINED_NQ)

MAX_N = 4
PLACEMENTS = ("fallback", "literal", "derived")
PARTIES = ("Alice", "Bob", "Charlie")
GHZ_QUBIT = {"Alice": "A", "Bob": "B", "Charlie": "C"}
UNKNOWN_QUBIT = {"Alice": "X", "Bob": "Y", "Charlie": "Z"}


@dataclass(frozen=True)
class OpSpec:
    """Member T(x, t) of the x-th restricted set."""

    x: int
    phases: tuple[complex, ...]
    unitary: bool = True

    def __post_init__(self):
        phases = tuple(complex(p) for p in np.asarray(self.phases, dtype=complex).reshape(-1))
        object.__setattr__(self, "phases", phases)
        N = int(round(np.log2(len(phases)))) if phases else 0
        if N < 1 or 2**N != len(phases):
            raise ValueError(f"need 2^N phases, got {len(phases)}")
        SetIndex(self.x, N)
        mods = np.abs(np.array(phases))
        if np.any(mods == 0):
            raise ValueError("phases must be nonzero")
        if self.unitary and np.any(np.abs(mods - 1) > PHASE_TOL):
            raise ValueError("unitary mode requires unit-modulus phases")

    @classmethod
    def one_qubit(cls, d: int, u, unitary: bool = True) -> OpSpec:
        """U(d, u): d=0 diagonal, d=1 antidiagonal."""
        if d not in (0, 1):
            raise ValueError(f"d must be 0 or 1, got {d!r}")
        return cls(d + 1, tuple(u), unitary)

    @classmethod
    def from_angles(cls, x: int, angles, unitary: bool = True) -> OpSpec:
        return cls(x, tuple(np.exp(1j * np.asarray(angles, dtype=float))), unitary)

    @classmethod
    def random(cls, x: int, N: int, rng: np.random.Generator) -> OpSpec:
        return cls.from_angles(x, rng.uniform(0.0, 2 * np.pi, size=2**N))

    @property
    def N(self) -> int:
        return int(round(np.log2(len(self.phases))))

    @property
    def d(self) -> int:
        if self.N != 1:
            raise ValueError("d is defined for one-qubit operations only")
        return self.x - 1

    def bits(self) -> tuple[int, ...]:
        return SetIndex(self.x, self.N).to_bits()

    def matrix(self) -> np.ndarray:
        return build_T(self.x, self.phases, self.unitary)

    def fixed_form(self) -> np.ndarray:
        return build_R(self.x, self.N)


@dataclass(frozen=True)
class ProtocolConfig:
    family: str
    op: OpSpec
    op2: Optional[OpSpec] = None
    N: int = 1
    n: int = 0
    variant: int = 1
    outcome_mode: str = "all"  # all | fixed | sample
    fixed_bits: tuple[int, ...] = ()
    sample_seed: int = 0
    unknown_state: Optional[tuple[complex, ...]] = None
    state_seed: int = 0
    roles: Optional[tuple[str, str, str]] = None
    placement: str = "fallback"
    skip_startup: bool = False
    withhold_password: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not 1 <= self.N <= MAX_N:
            raise ValueError(f"N={self.N} outside 1..{MAX_N}")
        if self.family in (CONTROLLED_1Q, COMBINED_1Q) and self.N != 1:
            raise ValueError(f"{self.family} acts on one qubit; got N={self.N}")
        if self.op.N != self.N:
            raise ValueError(f"operator acts on {self.op.N} qubits, config says N={self.N}")
        combined = self.family in (COMBINED_1Q, COMBINED_NQ)
        if combined:
            if self.op2 is None:
                raise ValueError(f"{self.family} needs two operator specs")
            if self.op2.N != self.N:
                raise ValueError("both operators must act on N qubits")
        elif self.op2 is not None:
            raise ValueError(f"{self.family} takes a single operator")
        if self.family == CONTROLLED_NQ:
            if not 0 <= self.n <= self.N:
                raise ValueError(f"controller count n={self.n} outside 0..{self.N}")
        elif self.family == CONTROLLED_1Q:
            if self.n not in (0, 1):
                raise ValueError("controlled1q has exactly one controller")
            object.__setattr__(self, "n", 1)
        elif self.n != 0:
            raise ValueError(f"{self.family} has no controllers")
        if self.variant not in (1, 2, 3, 4):
            raise ValueError(f"variant must be 1..4, got {self.variant!r}")
        if self.outcome_mode not in ("all", "fixed", "sample"):
            raise ValueError(f"unknown outcome mode {self.outcome_mode!r}")
        object.__setattr__(self, "fixed_bits", tuple(int(b) for b in self.fixed_bits))
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.unknown_state is not None:
            amps = tuple(complex(a) for a in np.asarray(self.unknown_state, dtype=complex).reshape(-1))
            if len(amps) != 2**self.N:
                raise ValueError(f"unknown state needs {2**self.N} amplitudes, got {len(amps)}")
            if np.linalg.norm(amps) == 0:
                raise ValueError("unknown state is the zero vector")
            object.__setattr__(self, "unknown_state", amps)
        if self.roles is not None:
            roles = tuple(self.roles)
            if sorted(roles) != sorted(PARTIES):
                raise ValueError(f"roles must be a permutation of {PARTIES}, got {roles}")
            if self.family not in (CONTROLLED_1Q, COMBINED_1Q):
                raise ValueError("role rotation applies to the one-qubit families")
            object.__setattr__(self, "roles", roles)

    @property
    def combined(self) -> bool:
        return self.family in (COMBINED_1Q, COMBINED_NQ)

    @property
    def controlled(self) -> bool:
        return not self.combined

    def with_(self, **changes) -> ProtocolConfig:
        return replace(self, **changes)


def _pairs(values) -> list[list[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _unpairs(values) -> tuple[complex, ...]:
    return tuple(complex(re, im) for re, im in values)


def config_to_dict(cfg: ProtocolConfig) -> dict:
    """JSON-safe echo of a config; ``config_from_dict`` inverts it."""
    return {
        "family": cfg.family,
        "N": cfg.N,
        "n": cfg.n,
        "variant": cfg.variant,
        "x": cfg.op.x,
        "phases": _pairs(cfg.op.phases),
        "y": cfg.op2.x if cfg.op2 is not None else None,
        "phases2": _pairs(cfg.op2.phases) if cfg.op2 is not None else None,
        "outcome_mode": cfg.outcome_mode,
        "fixed_bits": list(cfg.fixed_bits),
        "sample_seed": cfg.sample_seed,
        "unknown_state": _pairs(cfg.unknown_state) if cfg.unknown_state is not None else None,
        "state_seed": cfg.state_seed,
        "roles": list(cfg.roles) if cfg.roles is not None else None,
        "placement": cfg.placement,
        "skip_startup": cfg.skip_startup,
        "withhold_password": cfg.withhold_password,
    }


def config_from_dict(doc: dict) -> ProtocolConfig:
    op = OpSpec(int(doc["x"]), _unpairs(doc["phases"]))
    op2 = OpSpec(int(doc["y"]), _unpairs(doc["phases2"])) if doc.get("y") is not None else None
    state = doc.get("unknown_state")
    return ProtocolConfig(
        family=doc["family"],
        op=op,
        op2=op2,
        N=int(doc["N"]),
        n=int(doc.get("n", 0)),
        variant=int(doc.get("variant", 1)),
        outcome_mode=doc.get("outcome_mode", "all"),
        fixed_bits=tuple(doc.get("fixed_bits", ())),
        sample_seed=int(doc.get("sample_seed", 0)),
        unknown_state=_unpairs(state) if state is not None else None,
        state_seed=int(doc.get("state_seed", 0)),
        roles=tuple(doc["roles"]) if doc.get("roles") else None,
        placement=doc.get("placement", "fallback"),
        skip_startup=bool(doc.get("skip_startup", False)),
        withhold_password=bool(doc.get("withhold_password", False)),
    )
