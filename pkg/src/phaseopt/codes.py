"""Planar 4.8.8 color codes, their logical |0> states and phase assignments.

Qubit indices are 0-based throughout; the 7-qubit code's plaquettes
{1,2,3,4}, {2,3,5,6}, {3,4,6,7} in 1-based labels become
(0,1,2,3), (1,2,4,5), (2,3,5,6) here.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core_state import SparseState, XProduct, int_to_bits, support_mask
from .errors import DomainError

TWO_PI = 2.0 * np.pi

ProductId = tuple[int, ...]

FAMILY_PLAQUETTES = {7: 3, 17: 8, 31: 15}

# Layouts cut from the square-octagon tiling: squares centred at (i, j) with
# i + j odd, octagons at i + j even.  Qubits are listed top row first, left to
# right; boundary octagons keep half (4) of their corners.
_D5_COORDS = (
    (-1.3, 2.3), (-0.7, 2.3), (-1.3, 1.7), (-0.7, 1.7), (-2.3, 1.3), (-1.7, 1.3),
    (-0.3, 1.3), (0.3, 1.3), (-2.3, 0.7), (-1.7, 0.7), (-0.3, 0.7), (0.3, 0.7),
    (-2.7, 0.3), (-1.3, 0.3), (-0.7, 0.3), (0.7, 0.3), (1.3, 0.3),
)
_D5_PLAQUETTES = (
    (8, 9, 12, 13), (4, 5, 8, 9), (0, 2, 4, 5), (2, 3, 5, 6, 9, 10, 13, 14),
    (0, 1, 2, 3), (10, 11, 14, 15), (6, 7, 10, 11), (7, 11, 15, 16),
)
_D7_COORDS = (
    (-2.3, 3.3), (-1.7, 3.3), (-2.3, 2.7), (-1.7, 2.7), (-3.3, 2.3), (-2.7, 2.3),
    (-1.3, 2.3), (-0.7, 2.3), (-3.3, 1.7), (-2.7, 1.7), (-1.3, 1.7), (-0.7, 1.7),
    (-4.3, 1.3), (-3.7, 1.3), (-2.3, 1.3), (-1.7, 1.3), (-0.3, 1.3), (0.3, 1.3),
    (-4.3, 0.7), (-3.7, 0.7), (-2.3, 0.7), (-1.7, 0.7), (-0.3, 0.7), (0.3, 0.7),
    (-5.3, 0.3), (-4.7, 0.3), (-3.3, 0.3), (-2.7, 0.3), (-1.3, 0.3), (-0.7, 0.3),
    (0.7, 0.3),
)
_D7_PLAQUETTES = (
    (12, 18, 24, 25), (18, 19, 25, 26), (12, 13, 18, 19),
    (8, 9, 13, 14, 19, 20, 26, 27), (4, 5, 8, 9), (0, 2, 4, 5),
    (20, 21, 27, 28), (14, 15, 20, 21), (2, 3, 5, 6, 9, 10, 14, 15),
    (0, 1, 2, 3), (10, 11, 15, 16, 21, 22, 28, 29), (6, 7, 10, 11),
    (22, 23, 29, 30), (16, 17, 22, 23), (7, 11, 16, 17),
)

_D3_PLAQUETTES = ((0, 1, 2, 3), (1, 2, 4, 5), (2, 3, 5, 6))
# Basis index k = sum_i bit_i(k) 2^i picks plaquette _D3_GENERATORS[i], which
# reproduces the ordering 0000000, 0110110, 1111000, 1001110, 0011011, ...
_D3_GENERATORS = (1, 0, 2)
_D3_PRODUCTS = ((0,), (1,), (2,), (0, 1), (1, 2), (0, 2), (0, 1, 2))
_D3_ASSIGNMENT = (
    ((0,), 1), ((1,), 4), ((2,), 6), ((0, 1), 0), ((1, 2), 3), ((0, 2), 5), ((0, 1, 2), 2),
)


def product_label(pid: ProductId) -> str:
    """Human-readable label such as ``S1S2`` (1-based plaquette numbers)."""
    return "".join(f"S{i + 1}" for i in pid)


def parse_product_label(label: str) -> ProductId:
    parts = [p for p in label.upper().split("S") if p]
    try:
        return tuple(sorted(int(p) - 1 for p in parts))
    except ValueError as exc:
        raise DomainError(f"bad product label {label!r}") from exc


def default_product_order(n_plaquettes: int) -> tuple[ProductId, ...]:
    """Singles, then pairs, then higher products, each in lexicographic order."""
    return tuple(
        c for size in range(1, n_plaquettes + 1) for c in itertools.combinations(range(n_plaquettes), size)
    )


def _reduce(x: float, period: float) -> float:
    r = float(np.mod(x, period))
    return 0.0 if r >= period else r


@dataclass(frozen=True)
class PhaseVector:
    """Unknown relative phases phi_1..phi_{2^P-1}, reduced to [0, 2pi)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.mod(np.asarray(self.values, dtype=float).ravel(), TWO_PI)
        vals[vals >= TWO_PI] = 0.0  # mod of a tiny negative rounds up to the period
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ControlVector:
    """Compensation angles keyed by control qubit, reduced to [0, pi)."""

    values: Mapping[int, float]

    def __post_init__(self):
        vals = {int(q): _reduce(float(t), np.pi) for q, t in dict(self.values).items()}
        object.__setattr__(self, "values", vals)

    def __getitem__(self, qubit: int) -> float:
        return self.values[qubit]

    def as_array(self, qubits: Sequence[int]) -> np.ndarray:
        return np.array([self.values[q] for q in qubits], dtype=float)


@dataclass(frozen=True)
class CodeSpec:
    """Geometry and protocol bookkeeping for one code.

    Attributes:
        name: Identifier (``d3``, ``d5``, ``d7``, ``sub2`` or custom).
        n_qubits: Number of physical qubits.
        plaquettes: Qubit-index tuples, one per plaquette.
        basis_generators: Plaquette index attached to each bit of the basis
            index k, fixing the order of ``logical_basis``.
        products: Order in which stabilizer products are listed.
        assignment: (product, control qubit) pairs in optimization order.
        coordinates: Optional planar coordinates of the qubits.
    """

    name: str
    n_qubits: int
    plaquettes: tuple[tuple[int, ...], ...]
    basis_generators: tuple[int, ...] = ()
    products: tuple[ProductId, ...] = ()
    assignment: tuple[tuple[ProductId, int], ...] = ()
    coordinates: tuple[tuple[float, float], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        plaqs = tuple(tuple(sorted(int(q) for q in p)) for p in self.plaquettes)
        object.__setattr__(self, "plaquettes", plaqs)
        P = len(plaqs)
        if P == 0:
            raise DomainError("a code needs at least one plaquette")
        for p in plaqs:
            if not p or any(not 0 <= q < self.n_qubits for q in p) or len(set(p)) != len(p):
                raise DomainError(f"invalid plaquette {p}")
        for a, b in itertools.combinations(plaqs, 2):
            if len(set(a) & set(b)) % 2:
                raise DomainError(f"plaquettes {a} and {b} overlap on an odd number of qubits")
        gens = tuple(self.basis_generators) or tuple(range(P))
        if sorted(gens) != list(range(P)):
            raise DomainError("basis_generators must be a permutation of the plaquette indices")
        object.__setattr__(self, "basis_generators", gens)
        prods = tuple(tuple(sorted(p)) for p in self.products) or default_product_order(P)
        if len(set(prods)) != len(prods) or len(prods) != (1 << P) - 1:
            raise DomainError("products must list every nonempty plaquette product once")
        object.__setattr__(self, "products", prods)
        assign = tuple((tuple(sorted(pid)), int(q)) for pid, q in self.assignment)
        object.__setattr__(self, "assignment", assign)
        seen, known = set(), set(prods)
        for pid, q in assign:
            if pid not in known:
                raise DomainError(f"unknown product {pid}")
            if q not in self.support(pid):
                raise DomainError(f"control qubit {q} not in support of {product_label(pid)}")
            if q in seen:
                raise DomainError(f"control qubit {q} assigned twice")
            seen.add(q)
        if len({pid for pid, _ in assign}) != len(assign):
            raise DomainError("a product is assigned twice")
        if len(set(self.basis_keys.tolist())) != 1 << P:
            raise DomainError("plaquette masks are not independent")

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    @property
    def n_phases(self) -> int:
        return (1 << self.n_plaquettes) - 1

    def support(self, pid: ProductId) -> frozenset[int]:
        """Symmetric difference of the plaquettes in ``pid``."""
        s: set[int] = set()
        for i in pid:
            s ^= set(self.plaquettes[i])
        return frozenset(s)

    @cached_property
    def plaquette_masks(self) -> np.ndarray:
        return np.array([support_mask(p, self.n_qubits) for p in self.plaquettes], dtype=np.int64)

    @cached_property
    def basis_keys(self) -> np.ndarray:
        """Integer keys of the 2^P logical basis strings, index 0 = all zeros."""
        P = self.n_plaquettes
        gen_masks = self.plaquette_masks[list(self.basis_generators)]
        keys = np.zeros(1 << P, dtype=np.int64)
        for i in range(P):
            block = 1 << i
            keys[block : 2 * block] = keys[:block] ^ gen_masks[i]
        return keys

    @property
    def logical_basis(self) -> list[str]:
        return [int_to_bits(int(k), self.n_qubits) for k in self.basis_keys]

    @cached_property
    def basis_bits(self) -> np.ndarray:
        """(2^P, n_qubits) 0/1 matrix of the logical basis strings."""
        shifts = np.arange(self.n_qubits - 1, -1, -1, dtype=np.int64)
        return ((self.basis_keys[:, None] >> shifts[None, :]) & 1).astype(float)

    def product_index_mask(self, pid: ProductId) -> int:
        """Mask on basis indices: b_k xor support(pid) = b_{k xor mask}."""
        m = 0
        for bit, plaq in enumerate(self.basis_generators):
            if plaq in pid:
                m |= 1 << bit
        return m

    def product_supports(self) -> list[XProduct]:
        return [XProduct(self.support(pid)) for pid in self.products]

    @property
    def control_qubits(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.assignment)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "n_qubits": self.n_qubits,
            "plaquettes": [list(p) for p in self.plaquettes],
            "basis_generators": list(self.basis_generators),
            "assignment": [[product_label(pid), q] for pid, q in self.assignment],
        }
        if self.products != default_product_order(self.n_plaquettes):
            d["products"] = [product_label(p) for p in self.products]
        if self.coordinates is not None:
            d["coordinates"] = [list(c) for c in self.coordinates]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CodeSpec":
        return cls(
            name=d.get("name", "custom"),
            n_qubits=int(d["n_qubits"]),
            plaquettes=tuple(tuple(p) for p in d["plaquettes"]),
            basis_generators=tuple(d.get("basis_generators", ())),
            products=tuple(parse_product_label(p) for p in d.get("products", ())),
            assignment=tuple((parse_product_label(l), int(q)) for l, q in d.get("assignment", ())),
            coordinates=tuple(tuple(c) for c in d["coordinates"]) if "coordinates" in d else None,
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


def generator_assignment(plaquettes: Sequence[Sequence[int]], n_qubits: int) -> tuple[tuple[ProductId, int], ...]:
    """Injective plaquette -> qubit assignment with each qubit in its plaquette."""
    cost = np.full((len(plaquettes), n_qubits), 1e6)
    for i, p in enumerate(plaquettes):
        for q in p:
            cost[i, q] = q  # prefer low indices for determinism
    rows, cols = linear_sum_assignment(cost)
    if any(cost[r, c] >= 1e6 for r, c in zip(rows, cols)):
        raise DomainError("no injective generator assignment exists")
    return tuple(((int(r),), int(c)) for r, c in zip(rows, cols))


def build_code(generation: str) -> CodeSpec:
    """Return the d3 (7-qubit), d5 (17-qubit) or d7 (31-qubit) color code.

    The larger codes carry an assignment for their plaquette generators only:
    single-qubit control cannot address all 2^P - 1 products injectively.
    """
    gen = generation.lower()
    if gen == "d3":
        return CodeSpec("d3", 7, _D3_PLAQUETTES, _D3_GENERATORS, _D3_PRODUCTS, _D3_ASSIGNMENT)
    if gen == "d5":
        return CodeSpec("d5", 17, _D5_PLAQUETTES, assignment=generator_assignment(_D5_PLAQUETTES, 17),
                        coordinates=_D5_COORDS)
    if gen == "d7":
        return CodeSpec("d7", 31, _D7_PLAQUETTES, assignment=generator_assignment(_D7_PLAQUETTES, 31),
                        coordinates=_D7_COORDS)
    if gen in ("sub2", "two_plaquette"):
        return two_plaquette_subcode()
    raise DomainError(f"unknown code generation {generation!r}")


def two_plaquette_subcode() -> CodeSpec:
    """The 7-qubit register after the first two plaquettes are entangled."""
    return CodeSpec(
        "sub2", 7, _D3_PLAQUETTES[:2], (1, 0), ((0,), (1,), (0, 1)),
        (((0,), 1), ((1,), 4), ((0, 1), 0)),
    )


def stabilizer_products(code: CodeSpec) -> list[XProduct]:
    """All 2^P - 1 nonempty X-stabilizer products in the code's order."""
    return code.product_supports()


def as_phase_array(code: CodeSpec, phases: PhaseVector | Sequence[float] | np.ndarray) -> np.ndarray:
    """Phases with phi_0 = 0 prepended, shape (2^P,)."""
    vals = phases.values if isinstance(phases, PhaseVector) else np.asarray(phases, dtype=float).ravel()
    if vals.size != code.n_phases:
        raise DomainError(f"expected {code.n_phases} phases, got {vals.size}")
    return np.concatenate([[0.0], vals])


def logical_state(code: CodeSpec, phases: PhaseVector | Sequence[float]) -> SparseState:
    """(1/sqrt(2^P)) sum_k exp(i phi_k) |b_k> with phi_0 = 0."""
    phi = as_phase_array(code, phases)
    amps = np.exp(1j * phi) / np.sqrt(phi.size)
    return SparseState.from_arrays(code.n_qubits, code.basis_keys, amps)


def random_phases(code: CodeSpec, rng: np.random.Generator) -> PhaseVector:
    return PhaseVector(rng.uniform(0.0, TWO_PI, code.n_phases))


def controls_from(code: CodeSpec, values: Mapping[int, float] | Sequence[float] | None) -> ControlVector:
    """ControlVector over the code's control qubits (zeros when omitted)."""
    qubits = code.control_qubits
    if values is None:
        return ControlVector({q: 0.0 for q in qubits})
    if isinstance(values, ControlVector):
        values = values.values
    if isinstance(values, Mapping):
        if set(int(q) for q in values) != set(qubits):
            raise DomainError(f"controls must cover exactly qubits {sorted(qubits)}")
        return ControlVector(values)
    vals = list(values)
    if len(vals) != len(qubits):
        raise DomainError(f"expected {len(qubits)} control angles")
    return ControlVector(dict(zip(qubits, vals)))


def theta_full(code: CodeSpec, controls: ControlVector | Mapping[int, float]) -> np.ndarray:
    """Length-n_qubits angle vector with zeros on uncontrolled qubits."""
    vals = controls.values if isinstance(controls, ControlVector) else controls
    out = np.zeros(code.n_qubits)
    for q, t in vals.items():
        out[int(q)] = t
    return out


def z_parity_supports(code: CodeSpec) -> Iterable[tuple[int, ...]]:
    """Z-type plaquette supports (identical to the X-type ones for CSS color codes)."""
    return code.plaquettes
