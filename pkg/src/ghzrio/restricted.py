"""Restricted operator sets: one nonzero entry per row and per column.

The x-th set (1-based) is indexed by the x-th permutation of {1..2^N} in
lexicographic order.  ``build_T(x, t)`` puts ``t[m]`` at row m, column
p_m(x); ``build_R(x)`` is the same pattern with every entry set to 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

# control = first qubit, target = second
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
# control = second qubit, target = first
CNOT_21 = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)

PHASE_TOL = 1e-12


def sigma(i: int) -> np.ndarray:
    return (SIGMA0, SIGMA1, SIGMA2, SIGMA3)[i]


def r_gate(z: int) -> np.ndarray:
    """diag(1, (-1)^z): identity for z=0, sigma_3 for z=1."""
    if z not in (0, 1):
        raise ValueError(f"r_gate takes a bit, got {z!r}")
    return np.diag([1.0, (-1.0) ** z]).astype(complex)


def projector(bit: int) -> np.ndarray:
    p = np.zeros((2, 2), dtype=complex)
    p[bit, bit] = 1.0
    return p


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def set_count(N: int) -> int:
    return factorial(2**N)


def set_width(N: int) -> int:
    """Bits used to send a set index: floor(log2((2^N)!)) + 1."""
    return set_count(N).bit_length()


@dataclass(frozen=True)
class SetIndex:
    x: int
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 1 <= self.x <= set_count(self.N):
            raise ValueError(f"x={self.x} outside 1..{set_count(self.N)} for N={self.N}")

    @property
    def encoded_width(self) -> int:
        return set_width(self.N)

    def to_bits(self) -> tuple[int, ...]:
        w = self.encoded_width
        return tuple((self.x >> (w - 1 - i)) & 1 for i in range(w))

    @classmethod
    def from_bits(cls, bits: Sequence[int], N: int) -> SetIndex:
        if len(bits) != set_width(N):
            raise ValueError(f"expected {set_width(N)} bits, got {len(bits)}")
        x = 0
        for b in bits:
            x = (x << 1) | int(b)
        return cls(x, N)


def perm_from_index(x: int, N: int) -> tuple[int, ...]:
    """x-th (1-based) lexicographic permutation of 1..2^N."""
    SetIndex(x, N)
    size = 2**N
    pool = list(range(1, size + 1))
    rank = x - 1
    out = []
    for pos in range(size - 1, -1, -1):
        f = factorial(pos)
        digit, rank = divmod(rank, f)
        out.append(pool.pop(digit))
    return tuple(out)


def index_from_perm(perm: Sequence[int]) -> int:
    perm = list(perm)
    size = len(perm)
    if sorted(perm) != list(range(1, size + 1)) or size & (size - 1):
        raise ValueError(f"{perm} is not a permutation of 1..2^N")
    pool = list(range(1, size + 1))
    rank = 0
    for pos, v in enumerate(perm):
        i = pool.index(v)
        rank += i * factorial(size - 1 - pos)
        pool.pop(i)
    return rank + 1


def _check_phases(t, unitary: bool) -> np.ndarray:
    t = np.asarray(t, dtype=complex).reshape(-1)
    if np.any(np.abs(t) == 0):
        raise ValueError("restricted-set entries must be nonzero")
    if unitary and np.any(np.abs(np.abs(t) - 1) > PHASE_TOL):
        raise ValueError("unitary mode requires unit-modulus entries")
    return t


@dataclass(frozen=True)
class RestrictedOp:
    """T(x, t) held as a permutation plus its row entries."""

    N: int
    perm: tuple[int, ...]
    phases: tuple[complex, ...]
    unitary: bool = True

    def __post_init__(self):
        if len(self.perm) != 2**self.N or sorted(self.perm) != list(range(1, 2**self.N + 1)):
            raise ValueError(f"perm {self.perm} is not a permutation of 1..{2**self.N}")
        if len(self.phases) != 2**self.N:
            raise ValueError(f"need {2**self.N} entries, got {len(self.phases)}")
        _check_phases(self.phases, self.unitary)

    @classmethod
    def from_index(cls, x: int, t, unitary: bool = True) -> RestrictedOp:
        t = _check_phases(t, unitary)
        N = int(round(np.log2(t.size)))
        if 2**N != t.size:
            raise ValueError(f"{t.size} entries is not a power of two")
        return cls(N, perm_from_index(x, N), tuple(complex(v) for v in t), unitary)

    @property
    def x(self) -> int:
        return index_from_perm(self.perm)

    def matrix(self) -> np.ndarray:
        dim = 2**self.N
        m = np.zeros((dim, dim), dtype=complex)
        m[np.arange(dim), np.array(self.perm) - 1] = self.phases
        return m


def build_T(x: int, t, unitary: bool = True) -> np.ndarray:
    return RestrictedOp.from_index(x, t, unitary).matrix()


def build_R(x: int, N: int) -> np.ndarray:
    """Fixed form of the x-th set: the 0/1 permutation matrix."""
    return build_T(x, np.ones(2**N))


def decompose_identity_check(x: int, t, tol: float = 1e-12) -> bool:
    """T(1, t) @ R(x) == T(x, t) entrywise."""
    t = np.asarray(t, dtype=complex)
    N = int(round(np.log2(t.size)))
    lhs = build_T(1, t, unitary=False) @ build_R(x, N)
    return bool(np.max(np.abs(lhs - build_T(x, t, unitary=False))) <= tol)


def one_qubit_u(d: int, u, unitary: bool = True) -> np.ndarray:
    """U(0,u) = diag(u0, u1); U(1,u) = [[0, u0], [u1, 0]]."""
    if d not in (0, 1):
        raise ValueError(f"d must be 0 or 1, got {d!r}")
    u = _check_phases(u, unitary)
    if u.size != 2:
        raise ValueError("U(d,u) takes two entries")
    return build_T(d + 1, u, unitary)


def random_phases(rng: np.random.Generator, N: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=2**N))
