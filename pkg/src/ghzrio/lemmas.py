"""Small operator identities the protocols rest on, as checkable (lhs, rhs) pairs.

Each ``*_case`` function returns the two sides for one parameter choice;
``verify_all`` sweeps every parameter choice and reports the worst entrywise
gap per identity.
"""
from __future__ import annotations

from itertools import product
from typing import Callable, Iterator

import numpy as np

from .permops import f_n, w_n
from .restricted import (
    CNOT_21,
    HADAMARD,
    build_R,
    kron_all,
    one_qubit_u,
    projector,
    r_gate,
    set_count,
    sigma,
)

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)


def ket(*bits: int) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2) if bits else 0] = 1.0
    return v


def prep_op(b: int) -> np.ndarray:
    """(|b><b| (x) I) C^not(2,1) on (B, Y): Y controls B, then B is found in b."""
    return np.kron(projector(b), I2) @ CNOT_21


def bell_prep_case(b: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """[I (x) prep_op(b)](|00k> + |11k>) = (sigma_b (x) I_4)|k b k> on (A, B, Y)."""
    lhs = np.kron(I2, prep_op(b)) @ (ket(0, 0, k) + ket(1, 1, k))
    rhs = np.kron(sigma(b), I4) @ ket(k, b, k)
    return lhs, rhs


def ghz_prep_case(c: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """[I_4 (x) prep_op(c)] |GHZ>_{ABC}|k>_Z versus the reordered product form.

    The right side carries the 1/sqrt(2) of the GHZ normalization so the two
    sides agree exactly.
    """
    ghz = (ket(0, 0, 0) + ket(1, 1, 1)) / np.sqrt(2)
    lhs = np.kron(I4, prep_op(c)) @ np.kron(ghz, ket(k))
    swap34 = w_n(f_n(3, 4, 4).inverse())
    rhs = swap34 @ kron_all([sigma(c), sigma(c), I4]) @ np.kron(ket(k, k, k), ket(c)) / np.sqrt(2)
    return lhs, rhs


def phase_commute_case(beta: int, gamma: int) -> tuple[np.ndarray, np.ndarray]:
    """(r (x) r) prep_op(beta) = prep_op(beta) (r (x) I)."""
    r = r_gate(gamma)
    return np.kron(r, r) @ prep_op(beta), prep_op(beta) @ np.kron(r, I2)


def hadamard_phase_case(a: int, j: int) -> tuple[complex, complex]:
    """(-1)^{aj} <a|H|j> = 1/sqrt(2)."""
    return (-1) ** (a * j) * HADAMARD[a, j], 1 / np.sqrt(2)


def single_entry_case(R: np.ndarray, j: int, l: int, k: int) -> tuple[complex, complex]:
    """<j|R|k><l|R|k> = delta_jl <j|R|k> when each column has one nonzero entry."""
    return R[j, k] * R[l, k], (1.0 if j == l else 0.0) * R[j, k]


def aft_pre_case(b: int, c: int) -> tuple[np.ndarray, np.ndarray]:
    """P_aft(c) P(b) = P(b) P_pre(c) on (B, Y)."""
    r = r_gate(c)
    return np.kron(r, r) @ prep_op(b), prep_op(b) @ np.kron(r, I2)


def recovery_aft_case(a: int, d: int, c: int) -> tuple[np.ndarray, np.ndarray]:
    """R(a;d) P_aft(c) = (-1)^{cd} P_aft(c) R(a;d) on (B, Y)."""
    rec = np.kron(I2, r_gate(a) @ sigma(d))
    aft = np.kron(r_gate(c), r_gate(c))
    return rec @ aft, (-1) ** (c * d) * aft @ rec


def controller_case(c: int) -> tuple[np.ndarray, np.ndarray]:
    """(<c|H)_C |GHZ>_{ABC} = (1/sqrt(2)) (r(c) (x) I)|Phi+>_{AB}."""
    ghz = (ket(0, 0, 0) + ket(1, 1, 1)) / np.sqrt(2)
    bra = (ket(c) @ HADAMARD).conj()
    lhs = np.kron(I4, bra[None, :]) @ ghz
    phi = (ket(0, 0) + ket(1, 1)) / np.sqrt(2)
    return lhs, np.kron(r_gate(c), I2) @ phi / np.sqrt(2)


def u_split_case(d: int, u) -> tuple[np.ndarray, np.ndarray]:
    """U(d,u) = U(0,u) sigma_d."""
    return one_qubit_u(d, u), one_qubit_u(0, u) @ sigma(d)


def _cases(max_fixed_n: int = 2) -> Iterator[tuple[str, Callable[[], tuple]]]:
    bits = (0, 1)
    for b, k in product(bits, bits):
        yield "bell_prep", lambda b=b, k=k: bell_prep_case(b, k)
        yield "ghz_prep", lambda b=b, k=k: ghz_prep_case(b, k)
        yield "phase_commute", lambda b=b, k=k: phase_commute_case(b, k)
        yield "hadamard_phase", lambda b=b, k=k: hadamard_phase_case(b, k)
        yield "aft_pre", lambda b=b, k=k: aft_pre_case(b, k)
        yield "u_split", lambda b=b: u_split_case(b, np.exp(1j * np.array([0.3, 1.7])))
    for a, d, c in product(bits, bits, bits):
        yield "recovery_aft", lambda a=a, d=d, c=c: recovery_aft_case(a, d, c)
    for c in bits:
        yield "controller", lambda c=c: controller_case(c)
    for N in range(1, max_fixed_n + 1):
        for x in range(1, set_count(N) + 1):
            R = build_R(x, N)
            dim = 2**N
            for j, l, k in product(range(dim), repeat=3):
                yield "single_entry", lambda R=R, j=j, l=l, k=k: single_entry_case(R, j, l, k)
    for d in bits:
        yield "single_entry", lambda d=d: _sigma_single_entry(d)


def _sigma_single_entry(d: int) -> tuple[np.ndarray, np.ndarray]:
    s = sigma(d)
    lhs = np.array([[s[j, k] * s[l, k] for l in range(2)] for j, k in product(range(2), range(2))])
    rhs = np.array([[s[j, k] * (j == l) for l in range(2)] for j, k in product(range(2), range(2))])
    return lhs, rhs


def verify_all(max_fixed_n: int = 2) -> dict[str, float]:
    """Worst entrywise |lhs - rhs| for each identity over all its cases."""
    worst: dict[str, float] = {}
    for name, fn in _cases(max_fixed_n):
        lhs, rhs = fn()
        gap = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
        worst[name] = max(worst.get(name, 0.0), gap)
    return worst
