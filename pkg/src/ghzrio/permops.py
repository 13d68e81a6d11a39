"""Swapping transforms as qubit-position permutations.

Positions are 1-based.  ``QubitPermutation.dest[i-1]`` is the new position
of the qubit that sat at position ``i``.  ``p @ q`` means "apply q, then p",
matching operator products, so ``w_n(p @ q) == w_n(p) @ w_n(q)``.

Named transforms are built from their action on basis strings.  The
adjacent-swap product forms are provided separately (``*_product``) and
checked against the action forms in the test-suite.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .qstate import SpaceStructure, StateVector

__all__ = [
    "QubitPermutation",
    "swap_adjacent_matrix",
    "s_n",
    "f_n",
    "p_n",
    "interleaver",
    "w_n",
    "apply_perm",
    "conjugate_factors",
    "INTERLEAVER_KINDS",
]


@dataclass(frozen=True)
class QubitPermutation:
    dest: tuple[int, ...]

    def __post_init__(self):
        dest = tuple(int(d) for d in self.dest)
        object.__setattr__(self, "dest", dest)
        if sorted(dest) != list(range(1, len(dest) + 1)):
            raise ValueError(f"{dest} is not a bijection on 1..{len(dest)}")

    @property
    def n(self) -> int:
        return len(self.dest)

    @classmethod
    def identity(cls, n: int) -> QubitPermutation:
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_arrangement(cls, before: Sequence, after: Sequence) -> QubitPermutation:
        """Permutation taking the symbol string ``before`` to ``after``."""
        if sorted(map(str, before)) != sorted(map(str, after)) or len(set(before)) != len(before):
            raise ValueError("arrangements must be reorderings of distinct symbols")
        pos = {s: i + 1 for i, s in enumerate(after)}
        return cls(tuple(pos[s] for s in before))

    def __matmul__(self, other: QubitPermutation) -> QubitPermutation:
        if self.n != other.n:
            raise ValueError("size mismatch")
        return QubitPermutation(tuple(self.dest[d - 1] for d in other.dest))

    def inverse(self) -> QubitPermutation:
        inv = [0] * self.n
        for i, d in enumerate(self.dest):
            inv[d - 1] = i + 1
        return QubitPermutation(tuple(inv))

    def apply_to(self, seq: Sequence) -> tuple:
        """Rearrange a per-position sequence (bits, labels, factors)."""
        if len(seq) != self.n:
            raise ValueError(f"sequence of length {len(seq)} for a {self.n}-qubit permutation")
        out = [None] * self.n
        for i, d in enumerate(self.dest):
            out[d - 1] = seq[i]
        return tuple(out)

    def tensor(self, other: QubitPermutation) -> QubitPermutation:
        """self acting on the leading qubits, other on the trailing ones."""
        return QubitPermutation(self.dest + tuple(d + self.n for d in other.dest))


def _compose(perms: Sequence[QubitPermutation], n: int) -> QubitPermutation:
    # operator-product order: perms[0] is leftmost (applied last)
    return reduce(lambda a, b: a @ b, perms, QubitPermutation.identity(n))


def _identity(n: int) -> QubitPermutation:
    return QubitPermutation.identity(n)


def swap_adjacent_matrix() -> np.ndarray:
    return np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    )


def s_n(i: int, n: int) -> QubitPermutation:
    """Swap of positions i and i+1."""
    if not 1 <= i < n:
        raise ValueError(f"need 1 <= i < n, got i={i}, n={n}")
    dest = list(range(1, n + 1))
    dest[i - 1], dest[i] = i + 1, i
    return QubitPermutation(tuple(dest))


def f_n(i: int, j: int, n: int) -> QubitPermutation:
    """Move the qubit at j forward to i; i..j-1 shift right by one."""
    if not 1 <= i < j <= n:
        raise ValueError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")
    order = list(range(1, n + 1))
    order.insert(i - 1, order.pop(j - 1))
    return QubitPermutation.from_arrangement(range(1, n + 1), order)


def p_n(j: int, k: int, n: int) -> QubitPermutation:
    """Move the qubit at j backward to k; j+1..k shift left by one."""
    if not 1 <= j < k <= n:
        raise ValueError(f"need 1 <= j < k <= n, got j={j}, k={k}, n={n}")
    order = list(range(1, n + 1))
    order.insert(k - 1, order.pop(j - 1))
    return QubitPermutation.from_arrangement(range(1, n + 1), order)


def f_n_product(i: int, j: int, n: int) -> QubitPermutation:
    """F as the ordered product S(i,i+1) ... S(j-1,j); the rightmost acts first."""
    if not 1 <= i < j <= n:
        raise ValueError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")
    factors = [s_n(j - a, n) for a in range(1, j - i + 1)]
    return _compose(list(reversed(factors)), n)


def p_n_product(j: int, k: int, n: int) -> QubitPermutation:
    if not 1 <= j < k <= n:
        raise ValueError(f"need 1 <= j < k <= n, got j={j}, k={k}, n={n}")
    factors = [s_n(b, n) for b in range(j, k)]
    return _compose(list(reversed(factors)), n)


# ---------------------------------------------------------------------------
# block transforms, defined by their action on symbol strings

def _pairs(N, a="a", b="b"):
    return [f"{s}{i}" for i in range(1, N + 1) for s in (a, b)]


def _block(N, s):
    return [f"{s}{i}" for i in range(1, N + 1)]


def _need(cond, msg):
    if not cond:
        raise ValueError(msg)


def lambda2(N: int) -> QubitPermutation:
    """a1 b1 ... aN bN -> a1..aN b1..bN"""
    _need(N >= 2, "Lambda(2,N) needs N >= 2")
    return QubitPermutation.from_arrangement(_pairs(N), _block(N, "a") + _block(N, "b"))


def omega2(N: int) -> QubitPermutation:
    """a1..aN b1..bN -> b1..bN a1..aN"""
    _need(N >= 2, "Omega(2,N) needs N >= 2")
    before = _block(N, "a") + _block(N, "b")
    return QubitPermutation.from_arrangement(before, _block(N, "b") + _block(N, "a"))


def omega3(N: int) -> QubitPermutation:
    """(a1 b1 ... aN bN)(c1..cN) -> (c1..cN)(a1 b1 ... aN bN)"""
    _need(N >= 1, "Omega(3,N) needs N >= 1")
    before = _pairs(N) + _block(N, "c")
    return QubitPermutation.from_arrangement(before, _block(N, "c") + _pairs(N))


def upsilon3(N: int) -> QubitPermutation:
    """a1 b1 ... aN bN k1..kN -> a1 b1 k1 ... aN bN kN"""
    _need(N >= 1, "Upsilon(3,N) needs N >= 1")
    after = [f"{s}{i}" for i in range(1, N + 1) for s in "abk"]
    return QubitPermutation.from_arrangement(_pairs(N) + _block(N, "k"), after)


def upsilon4(N: int) -> QubitPermutation:
    """a1 b1 c1 ... aN bN cN k1..kN -> a1 b1 c1 k1 ... aN bN cN kN"""
    _need(N >= 1, "Upsilon(4,N) needs N >= 1")
    before = [f"{s}{i}" for i in range(1, N + 1) for s in "abc"] + _block(N, "k")
    after = [f"{s}{i}" for i in range(1, N + 1) for s in "abck"]
    return QubitPermutation.from_arrangement(before, after)


def gamma3(N: int) -> QubitPermutation:
    """a1 b1 ... aN bN k1..kN -> a1..aN k1..kN b1..bN"""
    _need(N >= 2, "Gamma(3,N) needs N >= 2")
    after = _block(N, "a") + _block(N, "k") + _block(N, "b")
    return QubitPermutation.from_arrangement(_pairs(N) + _block(N, "k"), after)


def _controlled_layout(N: int, n: int) -> list[str]:
    """n (a b c) triples, N-n (a b) pairs, then the k block."""
    _need(0 <= n <= N and N >= 1, f"need 0 <= n <= N, got n={n}, N={N}")
    out = [f"{s}{m}" for m in range(1, n + 1) for s in "abc"]
    out += [f"{s}{m}" for m in range(n + 1, N + 1) for s in "ab"]
    return out + _block(N, "k")


def theta(N: int) -> QubitPermutation:
    """a1 b1 c1 ... aN bN cN -> c1..cN a1 b1 ... aN bN"""
    _need(N >= 1, "Theta_N needs N >= 1")
    before = [f"{s}{m}" for m in range(1, N + 1) for s in "abc"]
    return QubitPermutation.from_arrangement(before, _block(N, "c") + _pairs(N))


def theta_a(N: int, n: int) -> QubitPermutation:
    """controlled layout -> c1..cn a1..aN b1..bN k1..kN"""
    before = _controlled_layout(N, n)
    after = _block(n, "c") + _block(N, "a") + _block(N, "b") + _block(N, "k")
    return QubitPermutation.from_arrangement(before, after)


def theta_b(N: int, n: int) -> QubitPermutation:
    """controlled layout -> c1..cn (a1 b1 k1) ... (aN bN kN)"""
    before = _controlled_layout(N, n)
    after = _block(n, "c") + [f"{s}{m}" for m in range(1, N + 1) for s in "abk"]
    return QubitPermutation.from_arrangement(before, after)


def theta_c(N: int, n: int) -> QubitPermutation:
    """controlled layout -> c1..cn (a1 b1) ... (aN bN) k1..kN"""
    before = _controlled_layout(N, n)
    after = _block(n, "c") + _pairs(N) + _block(N, "k")
    return QubitPermutation.from_arrangement(before, after)


def xi(N: int, n: int) -> QubitPermutation:
    """c1..cn (a1 b1 k1) ... (aN bN kN) -> controlled layout"""
    before = _block(n, "c") + [f"{s}{m}" for m in range(1, N + 1) for s in "abk"]
    return QubitPermutation.from_arrangement(before, _controlled_layout(N, n))


_KINDS = {
    "Lambda2": lambda N, n: lambda2(N),
    "Omega2": lambda N, n: omega2(N),
    "Omega3": lambda N, n: omega3(N),
    "Upsilon3": lambda N, n: upsilon3(N),
    "Upsilon4": lambda N, n: upsilon4(N),
    "Gamma3": lambda N, n: gamma3(N),
    "ThetaN": lambda N, n: theta(N),
    "ThetaA": theta_a,
    "ThetaB": theta_b,
    "ThetaC": theta_c,
    "Xi": xi,
}
INTERLEAVER_KINDS = tuple(_KINDS)


def interleaver(kind: str, N: int, n: int = 0) -> QubitPermutation:
    try:
        build = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown transform {kind!r}; choose from {INTERLEAVER_KINDS}") from None
    return build(N, n)


# ---------------------------------------------------------------------------
# printed product / composition forms

def lambda2_product(N: int) -> QubitPermutation:
    _need(N >= 2, "Lambda(2,N) needs N >= 2")
    factors = [p_n_product(2 * (N - i), 2 * N - i, 2 * N) for i in range(1, N)]
    return _compose(list(reversed(factors)), 2 * N)


def omega2_product(N: int) -> QubitPermutation:
    """N identical factors P_2N(1, 2N): each rotates the string left by one."""
    _need(N >= 2, "Omega(2,N) needs N >= 2")
    return _compose([p_n_product(1, 2 * N, 2 * N)] * N, 2 * N)


def upsilon3_product(N: int) -> QubitPermutation:
    _need(N >= 2, "Upsilon(3,N) needs N >= 2")
    factors = [f_n_product(3 * i, 2 * N + i, 3 * N) for i in range(1, N)]
    return _compose(list(reversed(factors)), 3 * N)


def upsilon4_product(N: int) -> QubitPermutation:
    _need(N >= 2, "Upsilon(4,N) needs N >= 2")
    factors = [f_n_product(4 * i, 3 * N + i, 4 * N) for i in range(1, N)]
    return _compose(list(reversed(factors)), 4 * N)


def gamma3_product(N: int) -> QubitPermutation:
    """(I_N (x) Omega(2,N)) (Lambda(2,N) (x) I_N)"""
    left = _identity(N).tensor(omega2(N))
    right = lambda2(N).tensor(_identity(N))
    return left @ right


def omega3_product(N: int) -> QubitPermutation:
    """(Omega(2,N) (x) I_N) (I_N (x) Omega(2,N))"""
    left = omega2(N).tensor(_identity(N))
    right = _identity(N).tensor(omega2(N))
    return left @ right


def theta_product(N: int) -> QubitPermutation:
    """Omega(3,N) Upsilon^-1(3,N), with the c string playing the k block."""
    return omega3(N) @ upsilon3(N).inverse()


def _padded(p: QubitPermutation, total: int) -> QubitPermutation:
    return p.tensor(_identity(total - p.n)) if total > p.n else p


def theta_c_product(N: int, n: int) -> QubitPermutation:
    total = 3 * N + n
    return _padded(theta(n), total) if n else _identity(total)


def theta_a_product(N: int, n: int) -> QubitPermutation:
    total = 3 * N + n
    mid = _identity(n).tensor(lambda2(N)).tensor(_identity(N)) if N >= 2 else _identity(total)
    return mid @ theta_c_product(N, n)


def theta_b_product(N: int, n: int) -> QubitPermutation:
    return _identity(n).tensor(upsilon3(N)) @ theta_c_product(N, n)


def xi_product(N: int, n: int) -> QubitPermutation:
    """The printed composition (I (x) Upsilon(3,N)) Theta_C^-1(n)."""
    return _identity(n).tensor(upsilon3(N)) @ theta_c_product(N, n).inverse()


# ---------------------------------------------------------------------------
# matrices and state action

def _bits_of(index: int, n: int) -> list[int]:
    return [(index >> (n - 1 - i)) & 1 for i in range(n)]


def _index_of(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | b
    return out


def w_n(perm: QubitPermutation) -> np.ndarray:
    """0/1 matrix sending |q_1..q_n> to the rearranged basis state."""
    n = perm.n
    dim = 2**n
    m = np.zeros((dim, dim))
    for col in range(dim):
        m[_index_of(perm.apply_to(_bits_of(col, n))), col] = 1.0
    return m


def apply_perm(perm: QubitPermutation, state: StateVector, relabel: bool = False) -> StateVector:
    """Physically move qubits.  With ``relabel`` the labels travel with the
    qubits, otherwise the register keeps its structure."""
    if perm.n != state.n_qubits:
        raise ValueError(f"{perm.n}-qubit permutation on {state.n_qubits} qubits")
    src = perm.inverse().dest
    psi = np.transpose(state.tensor(), [s - 1 for s in src])
    structure = state.structure
    if relabel:
        structure = SpaceStructure(perm.apply_to(state.labels))
    return StateVector(structure, psi.reshape(-1), state.normalized)


def conjugate_factors(perm: QubitPermutation, factors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Factor list of W (M_1 (x) ... (x) M_n) W^-1."""
    return list(perm.apply_to(list(factors)))
