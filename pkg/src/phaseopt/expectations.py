"""Stabilizer expectations as functions of the phases phi and controls theta.

Two evaluation routes are provided:

* hand-derived cosine sums for the 7-qubit code and its two-plaquette
  sub-code (``closed_form_expectation``), stored as coefficient tables;
* a generic phase-sum evaluation valid for any code (``oracle_expectations``):
  with alpha_k = phi_k + 2 * sum_{j in b_k} theta_j the expectation of the
  X product with support s is mean_k cos(alpha_k - alpha_{k'}), where
  b_{k'} = b_k xor s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .codes import (
    CodeSpec,
    ControlVector,
    PhaseVector,
    ProductId,
    as_phase_array,
    controls_from,
    logical_state,
    product_label,
    theta_full,
)
from .core_state import apply_z_rotations, x_expectation
from .errors import CapacityError, DomainError

# Each term is (phase indices, theta qubits) with signs; qubit labels 1-based.
# A term contributes cos(sum sign*phi_i + 2 * sum sign*theta_j).
D3_TABLE: dict[ProductId, tuple] = {
    (0,): (((2,), (1, 2, 3, 4)), ((1, -3), (-1, 2, 3, -4)), ((4, -6), (-1, -2, 3, 4)), ((5, -7), (-1, 2, -3, 4))),
    (1,): (((1,), (2, 3, 5, 6)), ((2, -3), (2, 3, -5, -6)), ((4, -5), (-2, 3, -5, 6)), ((6, -7), (2, -3, -5, 6))),
    (2,): (((4,), (3, 4, 6, 7)), ((1, -5), (3, -4, 6, -7)), ((2, -6), (3, 4, -6, -7)), ((3, -7), (-3, 4, 6, -7))),
    (0, 1): (((3,), (1, 4, 5, 6)), ((1, -2), (-1, -4, 5, 6)), ((4, -7), (-1, 4, -5, 6)), ((5, -6), (-1, 4, 5, -6))),
    (1, 2): (((5,), (2, 4, 5, 7)), ((1, -4), (2, -4, 5, -7)), ((2, -7), (2, 4, -5, -7)), ((3, -6), (-2, 4, 5, -7))),
    (0, 2): (((6,), (1, 2, 6, 7)), ((1, -7), (-1, 2, 6, -7)), ((2, -4), (1, 2, -6, -7)), ((3, -5), (1, -2, 6, -7))),
    (0, 1, 2): (((7,), (1, 3, 5, 7)), ((1, -6), (-1, 3, 5, -7)), ((2, -5), (1, 3, -5, -7)), ((3, -4), (1, -3, 5, -7))),
}

SUB2_TABLE: dict[ProductId, tuple] = {
    (0,): (((2,), (1, 2)), ((1, -3), (2, -1))),
    (1,): (((1,), (2, 5)), ((2, -3), (2, -5))),
    (0, 1): (((3,), (1, 5)), ((1, -2), (5, -1))),
}

SUB2_QUBITS = (0, 1, 4)  # theta_1, theta_2, theta_5


def _eval_table(terms, phi: np.ndarray, theta: np.ndarray) -> float:
    """Average of the cosine terms; phi has phi_0 prepended, theta is per qubit."""
    total = 0.0
    for phis, thetas in terms:
        arg = sum(np.sign(i) * phi[abs(i)] for i in phis)
        arg += 2.0 * sum(np.sign(j) * theta[abs(j) - 1] for j in thetas)
        total += np.cos(arg)
    return total / len(terms)


def _closed_form_table(code: CodeSpec) -> dict[ProductId, tuple]:
    if code.name == "d3" and code.plaquettes == ((0, 1, 2, 3), (1, 2, 4, 5), (2, 3, 5, 6)):
        return D3_TABLE
    if code.name == "sub2" and code.plaquettes == ((0, 1, 2, 3), (1, 2, 4, 5)):
        return SUB2_TABLE
    raise CapacityError(f"no closed form for code {code.name!r}; use oracle_expectations")


def has_closed_form(code: CodeSpec) -> bool:
    try:
        _closed_form_table(code)
    except CapacityError:
        return False
    return True


def _controls(code: CodeSpec, controls) -> ControlVector:
    if isinstance(controls, ControlVector):
        return controls
    return controls_from(code, controls)


def closed_form_expectation(
    code: CodeSpec,
    product_id: ProductId,
    phases: PhaseVector | Sequence[float],
    controls: ControlVector | Mapping[int, float] | Sequence[float] | None = None,
    table: Mapping[ProductId, tuple] | None = None,
) -> float:
    """Hand-derived expectation of one stabilizer product.

    Args:
        code: ``d3`` or the two-plaquette sub-code.
        product_id: Plaquette indices of the product, e.g. ``(0, 1)``.
        phases: The 2^P - 1 relative phases.
        controls: Control angles (zeros when omitted).
        table: Override of the coefficient table (used for mutation tests).

    Raises:
        CapacityError: for codes without a closed form.
    """
    tab = table if table is not None else _closed_form_table(code)
    pid = tuple(sorted(product_id))
    if pid not in tab:
        raise DomainError(f"unknown product {pid}")
    phi = as_phase_array(code, phases)
    theta = theta_full(code, _controls(code, controls))
    return float(_eval_table(tab[pid], phi, theta))


def closed_form_expectations(code, phases, controls=None, table=None) -> np.ndarray:
    return np.array([closed_form_expectation(code, pid, phases, controls, table) for pid in code.products])


def alpha(code: CodeSpec, phi_full: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Term phases alpha_k, batched over leading axes of phi_full/theta."""
    return phi_full + 2.0 * theta @ code.basis_bits.T


def oracle_expectations(code: CodeSpec, phases, controls=None, products: Sequence[ProductId] | None = None) -> np.ndarray:
    """Expectations of the listed products (default all) via the phase sum."""
    phi = as_phase_array(code, phases)
    theta = theta_full(code, _controls(code, controls))
    return oracle_expectations_batch(code, phi, theta, products)


def oracle_expectations_batch(code: CodeSpec, phi_full: np.ndarray, theta: np.ndarray,
                              products: Sequence[ProductId] | None = None) -> np.ndarray:
    """Vectorized phase-sum expectations.

    Args:
        phi_full: (..., 2^P) phases with phi_0 included.
        theta: (..., n_qubits) rotation angles.

    Returns:
        (..., n_products) array.
    """
    a = alpha(code, phi_full, theta)
    idx = np.arange(a.shape[-1])
    prods = code.products if products is None else products
    out = [np.cos(a - a[..., idx ^ code.product_index_mask(pid)]).mean(axis=-1) for pid in prods]
    return np.stack(out, axis=-1)


def statevector_expectations(code: CodeSpec, phases, controls=None) -> np.ndarray:
    """Expectations through the sparse-state route (independent oracle)."""
    ctrl = _controls(code, controls)
    state = apply_z_rotations(logical_state(code, phases), ctrl.values)
    return np.array([x_expectation(state, op) for op in code.product_supports()])


def expectations(code: CodeSpec, phases, controls=None) -> np.ndarray:
    """Closed form where available, phase-sum evaluation otherwise."""
    if has_closed_form(code):
        return closed_form_expectations(code, phases, controls)
    return oracle_expectations(code, phases, controls)


def sum_objective(code: CodeSpec, phases, controls=None) -> float:
    """f(theta): the sum of all stabilizer-product expectations."""
    return float(expectations(code, phases, controls).sum())


@dataclass(frozen=True)
class CosineSection:
    """g(theta) = amplitude * cos(2 theta + phase) + offset."""

    amplitude: float
    phase: float
    offset: float

    def __call__(self, theta):
        return self.amplitude * np.cos(2.0 * np.asarray(theta) + self.phase) + self.offset

    @property
    def argmax(self) -> float:
        """Maximizer in [0, pi)."""
        return float(np.mod(-self.phase, 2.0 * np.pi) / 2.0)

    @property
    def max_value(self) -> float:
        return self.amplitude + self.offset

    @classmethod
    def from_probes(cls, g0: float, g_quarter: float, g_half: float) -> "CosineSection":
        """Fit from values at theta = 0, pi/4, pi/2."""
        c = 0.5 * (g0 + g_half)
        x, y = g0 - c, -(g_quarter - c)
        return cls(float(np.hypot(x, y)), float(np.arctan2(y, x)), float(c))


def fit_section(g) -> CosineSection:
    """Three-probe fit of a single-frequency function of theta."""
    return CosineSection.from_probes(g(0.0), g(np.pi / 4), g(np.pi / 2))


def section_of(code: CodeSpec, product_set: Sequence[ProductId] | None, phases, controls, coordinate: int) -> CosineSection:
    """Section of sum_{p in product_set} <S_p> along one control qubit.

    ``product_set=None`` selects every product, i.e. the sum objective f.
    """
    ctrl = _controls(code, controls)
    if coordinate not in ctrl.values:
        raise DomainError(f"qubit {coordinate} is not a control qubit")
    prods = list(code.products) if product_set is None else [tuple(sorted(p)) for p in product_set]
    idx = [code.products.index(p) for p in prods]
    use_closed = has_closed_form(code)

    def g(t):
        vals = dict(ctrl.values)
        vals[coordinate] = t
        cv = ControlVector(vals)  # period pi, so the reduction is harmless
        e = closed_form_expectations(code, phases, cv) if use_closed else oracle_expectations(code, phases, cv)
        return float(e[idx].sum())

    return fit_section(g)


def _sub2_args(phases, controls) -> tuple[np.ndarray, np.ndarray]:
    phi = np.asarray(phases.values if isinstance(phases, PhaseVector) else phases, dtype=float).ravel()
    if phi.size != 3:
        raise DomainError("sub-code needs 3 phases")
    if isinstance(controls, ControlVector):
        controls = controls.values
    if isinstance(controls, Mapping):
        th = np.array([controls[q] for q in SUB2_QUBITS], dtype=float)
    else:
        th = np.asarray(controls, dtype=float).ravel()
    if th.size != 3:
        raise DomainError("sub-code needs controls (theta_1, theta_2, theta_5)")
    return phi, th


def gradient_f(phases, controls) -> np.ndarray:
    """Analytic gradient of the sub-code objective w.r.t. (theta_1, theta_2, theta_5)."""
    (p1, p2, p3), (t1, t2, t5) = _sub2_args(phases, controls)
    cos, sin = np.cos, np.sin
    return -4.0 * np.array([
        cos(t2 + t5 + p1 / 2) * cos(t2 - t5 + p2 / 2 - p3 / 2) * sin(2 * t1 - p1 / 2 + p2 / 2 + p3 / 2),
        cos(t1 + t5 + p3 / 2) * cos(t1 - t5 - p1 / 2 + p2 / 2) * sin(2 * t2 + p1 / 2 + p2 / 2 - p3 / 2),
        cos(t1 + t2 + p2 / 2) * cos(t1 - t2 - p1 / 2 + p3 / 2) * sin(2 * t5 + p1 / 2 - p2 / 2 + p3 / 2),
    ])


def critical_point_angles(phases, k: Sequence[int] = (0, 0, 0)) -> np.ndarray:
    """Unreduced (theta_1, theta_2, theta_5) of a max/min critical point."""
    phi = np.asarray(phases.values if isinstance(phases, PhaseVector) else phases, dtype=float).ravel()
    p1, p2, p3 = phi
    base = np.array([p1 - p2 - p3, -p1 - p2 + p3, -p1 + p2 - p3]) / 4.0
    return base + 0.5 * np.pi * np.asarray(k, dtype=float)


def critical_points(phases, k: Sequence[int] = (0, 0, 0)) -> ControlVector:
    """Critical point of the sub-code objective for the integer triple k."""
    return ControlVector(dict(zip(SUB2_QUBITS, critical_point_angles(phases, k))))


def critical_value(k: Sequence[int]) -> int:
    """f at the critical point labelled by k (either 3 or -1)."""
    k1, k2, k3 = (int(v) for v in k)
    return (-1) ** (k1 + k2) + (-1) ** (k1 + k3) + (-1) ** (k2 + k3)


def describe(code: CodeSpec) -> list[str]:
    return [product_label(p) for p in code.products]
