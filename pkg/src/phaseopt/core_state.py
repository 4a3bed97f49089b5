"""Sparse superposition states, X-type Pauli products and diagonal Z rotations.

Bit order: qubit index 0 is the leftmost character of a bitstring literal,
so ``"0110110"`` lists qubits 0..6 from left to right.

Rotation convention: a compensation angle ``theta`` on qubit ``j`` multiplies
a basis term by ``exp(-i*theta)`` when bit ``j`` is 0 and by ``exp(+i*theta)``
when it is 1.  The relative phase acquired by a term is therefore
``+2*theta`` per set bit, which is the form the closed-form expectations use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, DomainError, NumericConsistencyError

NORM_TOL = 1e-12
IMAG_TOL = 1e-9
MAX_DENSE_QUBITS = 20


def bits_to_int(bits: str) -> int:
    """Parse a bitstring literal, qubit 0 being the most significant bit."""
    if not bits or any(c not in "01" for c in bits):
        raise DomainError(f"not a bitstring: {bits!r}")
    return int(bits, 2)


def int_to_bits(value: int, n_qubits: int) -> str:
    return format(value, f"0{n_qubits}b")


def support_mask(support: Iterable[int], n_qubits: int) -> int:
    """Integer mask with the bits of ``support`` set (qubit 0 = MSB)."""
    mask = 0
    for j in support:
        if not 0 <= j < n_qubits:
            raise DomainError(f"qubit index {j} out of range for {n_qubits} qubits")
        mask |= 1 << (n_qubits - 1 - j)
    return mask


@dataclass(frozen=True)
class SparseState:
    """Normalized superposition stored as (bitstring, amplitude) pairs.

    Attributes:
        n_qubits: Number of qubits.
        terms: Ordered (bitstring, amplitude) pairs with distinct bitstrings.
    """

    n_qubits: int
    terms: tuple[tuple[str, complex], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DomainError("n_qubits must be positive")
        terms = tuple((str(b), complex(a)) for b, a in self.terms)
        index = {}
        for k, (b, _) in enumerate(terms):
            if len(b) != self.n_qubits:
                raise DomainError(f"bitstring {b!r} has wrong length")
            key = bits_to_int(b)
            if key in index:
                raise DomainError(f"duplicate bitstring {b!r}")
            index[key] = k
        norm = sum(abs(a) ** 2 for _, a in terms)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_arrays(cls, n_qubits: int, keys: Sequence[int], amps: Sequence[complex]) -> "SparseState":
        """Build a state from integer basis keys and amplitudes."""
        return cls(n_qubits, tuple((int_to_bits(int(k), n_qubits), complex(a)) for k, a in zip(keys, amps)))

    @property
    def keys(self) -> np.ndarray:
        return np.array([bits_to_int(b) for b, _ in self.terms], dtype=np.int64)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for _, a in self.terms], dtype=complex)

    def amplitude(self, bits: str | int) -> complex:
        key = bits_to_int(bits) if isinstance(bits, str) else int(bits)
        k = self._index.get(key)
        return 0j if k is None else self.terms[k][1]

    def dense(self) -> np.ndarray:
        """Full 2^n amplitude vector (only for small n)."""
        if self.n_qubits > MAX_DENSE_QUBITS:
            raise CapacityError(f"dense vector needs n_qubits <= {MAX_DENSE_QUBITS}")
        vec = np.zeros(1 << self.n_qubits, dtype=complex)
        vec[self.keys] = self.amplitudes
        return vec


@dataclass(frozen=True)
class XProduct:
    """Tensor product of Pauli X on ``support`` (empty support = identity)."""

    support: frozenset[int]

    def __init__(self, support: Iterable[int]):
        object.__setattr__(self, "support", frozenset(int(j) for j in support))

    def mask(self, n_qubits: int) -> int:
        return support_mask(self.support, n_qubits)


def apply_z_rotations(state: SparseState, angles: Mapping[int, float]) -> SparseState:
    """Apply independent Z rotations to the listed qubits.

    Each term picks up ``exp(i * sum_j s_j * theta_j)`` with ``s_j = -1`` for
    bit 0 and ``+1`` for bit 1 (see module docstring).
    """
    n = state.n_qubits
    for j in angles:
        if not 0 <= int(j) < n:
            raise DomainError(f"qubit index {j} out of range for {n} qubits")
    if not angles:
        return state
    new_terms = []
    for bits, amp in state.terms:
        phase = 0.0
        for j, theta in angles.items():
            phase += theta if bits[int(j)] == "1" else -theta
        new_terms.append((bits, amp * np.exp(1j * phase)))
    return SparseState(n, tuple(new_terms))


def x_expectation(state: SparseState, op: XProduct) -> float:
    """Expectation value of an X-type Pauli product.

    Raises:
        NumericConsistencyError: if the result has a non-negligible imaginary part.
    """
    mask = op.mask(state.n_qubits)
    if mask == 0:
        return 1.0
    total = 0j
    for bits, amp in state.terms:
        partner = state.amplitude(bits_to_int(bits) ^ mask)
        if partner:
            total += np.conj(partner) * amp
    if abs(total.imag) >= IMAG_TOL:
        raise NumericConsistencyError(f"X expectation has imaginary part {total.imag:.3e}")
    return float(min(1.0, max(-1.0, total.real)))


def z_parity_expectation(state: SparseState, support: Iterable[int]) -> float:
    """Expectation of the Z-type product on ``support`` (diagonal observable)."""
    mask = support_mask(support, state.n_qubits)
    total = 0.0
    for bits, amp in state.terms:
        sign = -1.0 if bin(bits_to_int(bits) & mask).count("1") % 2 else 1.0
        total += sign * abs(amp) ** 2
    return total


def walsh_hadamard(vec: np.ndarray) -> np.ndarray:
    """Apply H on every qubit of a dense vector of length 2^n."""
    out = np.array(vec, dtype=complex)
    n = out.size.bit_length() - 1
    h = 1
    for _ in range(n):
        out = out.reshape(-1, 2, h)
        a, b = out[:, 0, :].copy(), out[:, 1, :].copy()
        out[:, 0, :] = a + b
        out[:, 1, :] = a - b
        out = out.reshape(-1)
        h *= 2
    return out / np.sqrt(2.0**n)


def x_basis_distribution(state: SparseState) -> np.ndarray:
    """Outcome probabilities for measuring every qubit in the X basis.

    Index ``k`` of the returned array is the outcome whose bit ``j`` (qubit 0
    = MSB) is 0 for the ``+`` eigenvalue and 1 for ``-``.

    Raises:
        CapacityError: for more than 20 qubits.
    """
    if state.n_qubits > MAX_DENSE_QUBITS:
        raise CapacityError(f"X-basis distribution needs n_qubits <= {MAX_DENSE_QUBITS}")
    probs = np.abs(walsh_hadamard(state.dense())) ** 2
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise NumericConsistencyError(f"probabilities sum to {total!r}")
    return probs / total


def parity_signs(outcomes: np.ndarray, mask: int) -> np.ndarray:
    """+1/-1 parity of ``outcomes & mask`` for an integer array of outcomes."""
    bits = np.bitwise_and(outcomes.astype(np.int64), mask)
    parity = np.zeros(bits.shape, dtype=np.int64)
    while np.any(bits):
        parity ^= bits & 1
        bits = bits >> 1
    return 1 - 2 * parity


def expectation_from_distribution(probs: np.ndarray, op: XProduct, n_qubits: int) -> float:
    """Exact X-product expectation from an X-basis outcome distribution."""
    outcomes = np.arange(probs.size)
    return float(np.dot(probs, parity_signs(outcomes, op.mask(n_qubits))))
