"""Iterative phase compensation by global coordinate ascent.

Two objectives are supported.  ``individual`` scans, for each entry of the
code's assignment, the assigned control qubit to maximize that product's
expectation.  ``sum`` scans every control qubit (in ascending index order)
to maximize the sum of all product expectations.  One iteration is one full
pass over the coordinates.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codes import CodeSpec, ControlVector, PhaseVector, as_phase_array, logical_state, product_label
from .core_state import apply_z_rotations, z_parity_expectation
from .errors import DomainError
from .expectations import (
    closed_form_expectations,
    fit_section,
    has_closed_form,
    oracle_expectations_batch,
)
from .measurement import NoiseParams, make_rng, sample_estimates

TWO_PI = 2.0 * np.pi
DEFAULT_GRID_STEP = TWO_PI / 10
ANALYTIC_DEGENERATE = 1e-9


@dataclass(frozen=True)
class ScanPolicy:
    """How each coordinate is scanned and when the protocol stops.

    Attributes:
        mode: ``grid`` (evaluate on a uniform grid) or ``continuous``
            (three-probe cosine fit, exact argmax).
        grid_step: Grid spacing of the rotation angle 2 theta; must divide
            2 pi, so one scan covers theta in [0, pi) at step grid_step / 2.
        objective: ``individual`` or ``sum``.
        max_iterations: Maximum number of full passes.
        threshold: Convergence threshold on the chosen metric, relative to
            the noiseless scale: a run stops once the metric drops below
            threshold * (1 - p), which keeps the stopping step independent of
            the white-noise weight p.
        threshold_metric: ``delta1`` (distance of the sum from its maximum)
            or ``delta2`` (largest per-product distance).
        trailing_window: Number of recent estimate vectors averaged for the
            metric when estimates are shot-sampled.
    """

    mode: str = "continuous"
    grid_step: float = DEFAULT_GRID_STEP
    objective: str = "individual"
    max_iterations: int = 50
    threshold: float = 1e-3
    threshold_metric: str = "delta1"
    trailing_window: int = 3

    def __post_init__(self):
        if self.mode not in ("grid", "continuous"):
            raise DomainError(f"unknown scan mode {self.mode!r}")
        if self.objective not in ("individual", "sum"):
            raise DomainError(f"unknown objective {self.objective!r}")
        if self.threshold_metric not in ("delta1", "delta2"):
            raise DomainError(f"unknown metric {self.threshold_metric!r}")
        if not self.threshold > 0:
            raise DomainError("threshold must be positive")
        if self.max_iterations < 1 or self.trailing_window < 1:
            raise DomainError("max_iterations and trailing_window must be positive")
        if self.mode == "grid":
            if not self.grid_step > 0:
                raise DomainError("grid_step must be positive")
            ratio = TWO_PI / self.grid_step
            if abs(ratio - round(ratio)) * self.grid_step > 1e-9:
                raise DomainError("grid_step must divide 2*pi")

    @property
    def grid(self) -> np.ndarray:
        """Scanned theta values: one period of the rotation angle 2 theta."""
        return np.arange(int(round(TWO_PI / self.grid_step))) * self.grid_step / 2.0


@dataclass
class ScanResult:
    """Outcome of one coordinate scan."""

    angle: float
    value: float
    amplitude: float
    degenerate: bool
    angles: np.ndarray
    values: np.ndarray


def scan_coordinate(estimator: Callable[[float], float], coordinate: int, policy: ScanPolicy,
                    noise_floor: float = ANALYTIC_DEGENERATE) -> ScanResult:
    """Locate the angle maximizing ``estimator`` along one coordinate.

    Args:
        estimator: Maps an angle of ``coordinate`` to the objective value, all
            other coordinates frozen.
        coordinate: Control qubit being scanned (for bookkeeping only).
        policy: Grid or continuous scan settings.
        noise_floor: Amplitudes below this are flagged as degenerate.

    Returns:
        ScanResult; in grid mode ties go to the smallest angle.
    """
    if policy.mode == "continuous":
        sec = fit_section(estimator)
        probes = np.array([0.0, np.pi / 4, np.pi / 2])
        return ScanResult(sec.argmax, sec.max_value, sec.amplitude, sec.amplitude < noise_floor,
                          probes, sec(probes))
    angles = policy.grid
    values = np.array([estimator(float(a)) for a in angles])
    best = int(np.argmax(values))  # first maximum = smallest angle
    # least-squares single-frequency fit for the amplitude estimate
    design = np.column_stack([np.cos(2 * angles), np.sin(2 * angles), np.ones_like(angles)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    amp = float(np.hypot(coef[0], coef[1]))
    return ScanResult(float(angles[best]), float(values[best]), amp, amp < noise_floor, angles, values)


class AnalyticEstimator:
    """Exact Werner-scaled expectations of every product."""

    def __init__(self, code: CodeSpec, phases, p: float = 0.0):
        self.code = code
        self.phases = phases
        self.p = p
        self._phi = as_phase_array(code, phases)
        self._closed = has_closed_form(code)
        self.noise_floor = ANALYTIC_DEGENERATE

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        if self._closed:
            ctrl = ControlVector({q: theta[q] for q in self.code.control_qubits})
            e = closed_form_expectations(self.code, self.phases, ctrl)
        else:
            e = oracle_expectations_batch(self.code, self._phi, theta)
        return (1.0 - self.p) * e


class ShotEstimator:
    """Shot-sampled expectations from X-basis measurements of the rotated state."""

    def __init__(self, code: CodeSpec, phases, noise: NoiseParams, rng: np.random.Generator | None = None):
        self.code = code
        self.noise = noise
        self.rng = rng if rng is not None else make_rng(noise.seed)
        self._state = logical_state(code, phases)
        self._products = code.product_supports()
        # amplitude-fit noise floor: twice the standard error of a fitted amplitude
        self.noise_floor = 2.0 / np.sqrt(float(noise.shots))

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        angles = {q: float(theta[q]) for q in range(self.code.n_qubits) if theta[q] != 0.0}
        state = apply_z_rotations(self._state, angles)
        return np.array(sample_estimates(state, self._products, self.noise, self.rng))


@dataclass
class StepRecord:
    iteration: int
    coordinate: int
    target: str
    angle: float
    objective: float
    amplitude: float
    degenerate: bool
    delta1: float
    delta2: float
    scan_angles: list = field(default_factory=list)
    scan_values: list = field(default_factory=list)


@dataclass
class ConvergenceReport:
    """Trajectory and outcome of one optimization run."""

    iterations: int
    converged: bool
    products: list[str]
    control_qubits: list[int]
    theta_trajectory: list[dict]
    steps: list[StepRecord]
    delta1_history: list[float]
    delta2_history: list[float]
    final_theta: dict
    final_expectations: list[float]
    exact_expectations: list[float]
    policy: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_theta"] = {str(k): v for k, v in self.final_theta.items()}
        d["theta_trajectory"] = [{str(k): v for k, v in t.items()} for t in self.theta_trajectory]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def deltas(values: np.ndarray, s_max: float) -> tuple[float, float]:
    """(delta1, delta2) for a vector of product expectations."""
    d1 = abs(float(np.sum(values)) - s_max * values.size)
    d2 = float(np.max(np.abs(values - s_max)))
    return d1, d2


def coordinate_plan(code: CodeSpec, objective: str) -> list[tuple[int, list[int], str]]:
    """(control qubit, product indices maximized, label) for one pass."""
    if not code.assignment:
        raise DomainError(f"code {code.name!r} has no phase-to-stabilizer assignment")
    if objective == "individual":
        return [(q, [code.products.index(pid)], product_label(pid)) for pid, q in code.assignment]
    every = list(range(len(code.products)))
    return [(q, every, "f") for q in sorted(code.control_qubits)]


def optimize(code: CodeSpec, phases, noise: NoiseParams | None = None, policy: ScanPolicy | None = None,
             initial: dict | None = None, record_scans: bool = False) -> ConvergenceReport:
    """Run the iterative protocol until the chosen metric drops below threshold.

    The optimizer only sees estimator outputs; ``phases`` is used to build the
    hidden state.  Convergence is tested after every coordinate step and ``n``
    is the index of the pass in which it happened.
    """
    noise = noise or NoiseParams()
    policy = policy or ScanPolicy()
    phases = phases if isinstance(phases, PhaseVector) else PhaseVector(phases)
    est = AnalyticEstimator(code, phases, noise.p) if noise.analytic else ShotEstimator(code, phases, noise)
    exact = AnalyticEstimator(code, phases, noise.p)
    s_max = 1.0 - noise.p
    theta = np.zeros(code.n_qubits)
    for q, t in (initial or {}).items():
        theta[int(q)] = t
    plan = coordinate_plan(code, policy.objective)
    steps: list[StepRecord] = []
    trajectory: list[dict] = []
    d1_hist: list[float] = []
    d2_hist: list[float] = []
    recent: list[np.ndarray] = []
    converged = False
    n = 0
    window = 1 if noise.analytic else policy.trailing_window
    current = est(theta)
    for it in range(1, policy.max_iterations + 1):
        n = it
        for q, targets, label in plan:
            cache: dict[float, np.ndarray] = {}

            def objective(t, q=q, targets=targets, cache=cache):
                trial = theta.copy()
                trial[q] = t
                vals = est(trial)
                cache[float(t)] = vals
                return float(vals[targets].sum())

            res = scan_coordinate(objective, q, policy, est.noise_floor)
            if not res.degenerate:
                theta[q] = res.angle
            if policy.mode == "grid" and not res.degenerate:
                current = cache[res.angle]
            else:
                current = est(theta)
            recent = (recent + [current])[-window:]
            d1, d2 = deltas(np.mean(recent, axis=0), s_max)
            steps.append(StepRecord(it, q, label, float(theta[q]), float(current[targets].sum()),
                                    float(res.amplitude), bool(res.degenerate), d1, d2,
                                    res.angles.tolist() if record_scans else [],
                                    res.values.tolist() if record_scans else []))
            trajectory.append({c: float(theta[c]) for c in code.control_qubits})
            metric = d1 if policy.threshold_metric == "delta1" else d2
            if metric < policy.threshold * s_max and len(recent) >= window:
                converged = True
                break
        d1_hist.append(steps[-1].delta1)
        d2_hist.append(steps[-1].delta2)
        if converged:
            break
    final_theta = {c: float(np.mod(theta[c], np.pi)) for c in code.control_qubits}
    return ConvergenceReport(
        iterations=n,
        converged=converged,
        products=[product_label(p) for p in code.products],
        control_qubits=list(code.control_qubits),
        theta_trajectory=trajectory,
        steps=steps,
        delta1_history=d1_hist,
        delta2_history=d2_hist,
        final_theta=final_theta,
        final_expectations=[float(v) for v in current],
        exact_expectations=[float(v) for v in exact(theta)],
        policy=asdict(policy),
    )


def z_parities(code: CodeSpec, phases, theta: dict | None = None) -> np.ndarray:
    """Z-type plaquette expectations of the (optionally rotated) logical state."""
    state = logical_state(code, phases)
    if theta:
        state = apply_z_rotations(state, theta)
    return np.array([z_parity_expectation(state, p) for p in code.plaquettes])


@dataclass
class BatchResult:
    iterations: np.ndarray
    converged: np.ndarray
    theta: np.ndarray
    expectations: np.ndarray
    objective_history: list[np.ndarray]
    theta_history: list[np.ndarray]


def optimize_batch(code: CodeSpec, phi: np.ndarray, policy: ScanPolicy, p: float = 0.0,
                   keep_history: bool = False) -> BatchResult:
    """Vectorized analytic continuous-mode optimization of many runs.

    Follows exactly the same step/convergence rules as ``optimize`` with an
    analytic estimator; used by the Monte-Carlo studies.

    Args:
        phi: (runs, 2^P - 1) phases.
        policy: Must be continuous mode.
        p: Werner weight (scales every expectation by 1 - p).
        keep_history: Store the sum objective and theta after every step.
    """
    if policy.mode != "continuous":
        raise DomainError("optimize_batch supports continuous mode only")
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    runs = phi.shape[0]
    phi_full = np.concatenate([np.zeros((runs, 1)), phi], axis=1)
    theta = np.zeros((runs, code.n_qubits))
    scale = 1.0 - p

    def evaluate(th):
        return scale * oracle_expectations_batch(code, phi_full, th)

    plan = coordinate_plan(code, policy.objective)
    n = np.zeros(runs, dtype=int)
    done = np.zeros(runs, dtype=bool)
    f_hist, th_hist = [], []
    if keep_history:
        f_hist.append(evaluate(theta).sum(axis=1))
        th_hist.append(theta.copy())
    for it in range(1, policy.max_iterations + 1):
        for q, targets, _ in plan:
            active = ~done
            if not active.any():
                break
            th = theta[active]
            probes = []
            for t in (0.0, np.pi / 4, np.pi / 2):
                trial = th.copy()
                trial[:, q] = t
                probes.append(evaluate_subset(code, phi_full[active], trial, targets) * scale)
            g0, g1, g2 = probes  # same three-probe fit as CosineSection.from_probes
            c = 0.5 * (g0 + g2)
            x, y = g0 - c, -(g1 - c)
            amp = np.hypot(x, y)
            best = np.mod(-np.arctan2(y, x), TWO_PI) / 2.0
            th[:, q] = np.where(amp < ANALYTIC_DEGENERATE, th[:, q], best)
            theta[active] = th
            vals = scale * oracle_expectations_batch(code, phi_full[active], th)
            s_max = scale
            if policy.threshold_metric == "delta1":
                metric = np.abs(vals.sum(axis=1) - s_max * vals.shape[1])
            else:
                metric = np.abs(vals - s_max).max(axis=1)
            newly = metric < policy.threshold * s_max
            idx = np.flatnonzero(active)
            n[idx[newly]] = it
            done[idx[newly]] = True
            if keep_history:
                f_hist.append(evaluate(theta).sum(axis=1))
                th_hist.append(theta.copy())
        if done.all():
            break
    n[~done] = policy.max_iterations
    return BatchResult(n, done, theta, evaluate(theta), f_hist, th_hist)


def evaluate_subset(code: CodeSpec, phi_full: np.ndarray, theta: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Sum of the selected product expectations, batched over runs."""
    prods = [code.products[i] for i in targets]
    return oracle_expectations_batch(code, phi_full, theta, prods).sum(axis=-1)
