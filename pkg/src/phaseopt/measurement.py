"""White-noise mixing and shot-sampled X-basis stabilizer estimation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_state import SparseState, XProduct, parity_signs, x_basis_distribution, x_expectation
from .errors import DomainError

ANALYTIC = "analytic"
DEFAULT_SHOTS = 200


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class NoiseParams:
    """Werner weight ``p``, shot count (or ``"analytic"``) and RNG seed."""

    p: float = 0.0
    shots: int | str = ANALYTIC
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p}")
        if self.shots != ANALYTIC:
            if isinstance(self.shots, bool) or not isinstance(self.shots, (int, np.integer)) or self.shots < 1:
                raise DomainError(f"shots must be a positive integer or 'analytic', got {self.shots!r}")

    @property
    def analytic(self) -> bool:
        return self.shots == ANALYTIC


def werner_expectation(ideal: float, p: float) -> float:
    """Expectation of a traceless Pauli product in the mixture p*I/d + (1-p)|psi><psi|."""
    if not -1.0 - 1e-12 <= ideal <= 1.0 + 1e-12:
        raise DomainError(f"ideal expectation {ideal} outside [-1, 1]")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return (1.0 - p) * ideal


def sample_outcomes(probs: np.ndarray, shots: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Draw X-basis outcomes; each shot is replaced by a uniform string with probability p."""
    outcomes = rng.choice(probs.size, size=shots, p=probs)
    if p > 0:
        noisy = rng.random(shots) < p
        outcomes[noisy] = rng.integers(0, probs.size, size=int(noisy.sum()))
    return outcomes


def estimates_from_outcomes(outcomes: np.ndarray, products: Sequence[XProduct], n_qubits: int) -> list[float]:
    return [float(parity_signs(outcomes, op.mask(n_qubits)).mean()) for op in products]


def sample_estimates(
    state: SparseState,
    products: Sequence[XProduct],
    noise: NoiseParams,
    rng: np.random.Generator | None = None,
) -> list[float]:
    """Estimate every product from one shared set of shots.

    Args:
        state: Pure state being measured (at most 20 qubits for sampling).
        products: X products to estimate.
        noise: Werner weight, shots and seed.
        rng: Optional generator to continue a stream; ``noise.seed`` is used
            when omitted.
    """
    if noise.analytic:
        return [werner_expectation(x_expectation(state, op), noise.p) for op in products]
    probs = x_basis_distribution(state)
    gen = rng if rng is not None else make_rng(noise.seed)
    outcomes = sample_outcomes(probs, int(noise.shots), noise.p, gen)
    return estimates_from_outcomes(outcomes, products, state.n_qubits)
