"""Monte-Carlo convergence studies, extrema checks and DOF counting."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .codes import CodeSpec, build_code, two_plaquette_subcode
from .expectations import (
    SUB2_QUBITS,
    closed_form_expectations,
    critical_point_angles,
    critical_value,
    gradient_f,
    oracle_expectations_batch,
)
from .measurement import make_rng
from .optimizer import ScanPolicy, optimize_batch

TWO_PI = 2.0 * np.pi

# Reference figures quoted with the original protocol description.
REFERENCE_MEAN_AMPLITUDE = 0.81
REFERENCE_GAIN_PER_STEP = 0.40
REFERENCE_PREDICTED_N = 2.47


@dataclass
class ConvergenceStats:
    """Aggregate iteration counts over random phase configurations."""

    runs: int
    mean_n: float
    std_n: float
    max_n: int
    sem_n: float
    threshold: float
    metric: str
    variant: str
    histogram: dict[int, int]
    n_unconverged: int
    per_run_n: list[int] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("per_run_n")
        d["histogram"] = {str(k): v for k, v in sorted(self.histogram.items())}
        return d


def random_phase_matrix(code: CodeSpec, runs: int, seed: int) -> np.ndarray:
    """(runs, 2^P - 1) uniform phases; row i depends only on (seed, i)."""
    rng = make_rng(seed)
    return rng.uniform(0.0, TWO_PI, size=(runs, code.n_phases))


def monte_carlo_convergence(code: CodeSpec, variant: str, runs: int, policy: ScanPolicy | None = None,
                            seed: int = 0, chunk: int = 5000) -> ConvergenceStats:
    """Iteration statistics of the analytic continuous protocol over uniform random phases."""
    base = policy or ScanPolicy()
    pol = ScanPolicy(mode="continuous", objective=variant, max_iterations=base.max_iterations,
                     threshold=base.threshold, threshold_metric=base.threshold_metric)
    phi = random_phase_matrix(code, runs, seed)
    ns, conv = [], []
    for start in range(0, runs, chunk):
        res = optimize_batch(code, phi[start : start + chunk], pol)
        ns.append(res.iterations)
        conv.append(res.converged)
    n = np.concatenate(ns)
    ok = np.concatenate(conv)
    return _stats(n, ok, pol, variant)


def _stats(n: np.ndarray, ok: np.ndarray, pol: ScanPolicy, variant: str) -> ConvergenceStats:
    std = float(n.std(ddof=1)) if n.size > 1 else 0.0
    return ConvergenceStats(
        runs=int(n.size), mean_n=float(n.mean()), std_n=std, max_n=int(n.max()),
        sem_n=std / np.sqrt(n.size), threshold=pol.threshold, metric=pol.threshold_metric,
        variant=variant, histogram=dict(sorted(Counter(n.tolist()).items())),
        n_unconverged=int((~ok).sum()), per_run_n=n.tolist(),
    )


def threshold_sweep(code: CodeSpec, variant: str, thresholds: Sequence[float], runs: int, seed: int = 0,
                    metrics: Sequence[str] = ("delta1", "delta2"), max_iterations: int = 50) -> list[dict]:
    """Mean iteration count per threshold and metric on a common set of phases.

    Reusing the same phases for every threshold makes each run's n
    non-increasing as the threshold loosens, hence so is the mean.
    """
    phi = random_phase_matrix(code, runs, seed)
    rows = []
    for metric in metrics:
        for thr in sorted(thresholds):
            pol = ScanPolicy(objective=variant, threshold=float(thr), threshold_metric=metric,
                             max_iterations=max_iterations)
            res = optimize_batch(code, phi, pol)
            s = _stats(res.iterations, res.converged, pol, variant)
            rows.append({"threshold": float(thr), "metric": metric, "mean_n": s.mean_n, "std_n": s.std_n,
                         "max_n": s.max_n, "n_unconverged": s.n_unconverged})
    return rows


@dataclass
class AmplitudeStudy:
    """Monte-Carlo averages of section amplitudes and offsets of f."""

    samples: int
    mean_amplitude: dict[str, float]
    sem_amplitude: dict[str, float]
    mean_offset: dict[str, float]
    sem_offset: dict[str, float]
    predicted_n: dict[str, float]
    printed_formula_mean: float
    reference: dict[str, float]


def section_amplitudes(code: CodeSpec, phi: np.ndarray, theta: np.ndarray, coordinate: int) -> tuple[np.ndarray, np.ndarray]:
    """(A, c) of f along ``coordinate`` for each row of phi/theta."""
    phi_full = np.concatenate([np.zeros((phi.shape[0], 1)), phi], axis=1)
    probes = []
    for t in (0.0, np.pi / 4, np.pi / 2):
        th = theta.copy()
        th[:, coordinate] = t
        probes.append(oracle_expectations_batch(code, phi_full, th).sum(axis=1))
    c = 0.5 * (probes[0] + probes[2])
    return np.hypot(probes[0] - c, probes[1] - c), c


def mean_amplitude_study(samples: int = 100_000, seed: int = 0) -> AmplitudeStudy:
    """Average true section amplitude and offset of f for the sub-code and d3.

    The heuristic estimate assumes a gain of A/2 per coordinate step starting
    from f = 0, so n = f_max / (A/2) / (coordinates per pass).
    """
    rng = make_rng(seed)
    out: dict[str, dict] = {k: {} for k in ("A", "sA", "c", "sc", "n")}
    for code in (two_plaquette_subcode(), build_code("d3")):
        qubits = sorted(code.control_qubits)
        phi = rng.uniform(0, TWO_PI, (samples, code.n_phases))
        theta = np.zeros((samples, code.n_qubits))
        theta[:, qubits] = rng.uniform(0, np.pi, (samples, len(qubits)))
        coord = qubits[0]
        A, c = section_amplitudes(code, phi, theta, coord)
        out["A"][code.name] = float(A.mean())
        out["sA"][code.name] = float(A.std(ddof=1) / np.sqrt(samples))
        out["c"][code.name] = float(c.mean())
        out["sc"][code.name] = float(c.std(ddof=1) / np.sqrt(samples))
        out["n"][code.name] = float(code.n_phases / (A.mean() / 2) / len(qubits))
    # the printed amplitude expression: 0.5 * |cos(u) cos(v)| with u, v uniform
    u = rng.uniform(0, TWO_PI, (2, samples))
    printed = float(np.mean(0.5 * np.abs(np.cos(u[0]) * np.cos(u[1]))))
    return AmplitudeStudy(samples, out["A"], out["sA"], out["c"], out["sc"], out["n"], printed,
                          {"mean_amplitude": REFERENCE_MEAN_AMPLITUDE, "gain_per_step": REFERENCE_GAIN_PER_STEP,
                           "predicted_n": REFERENCE_PREDICTED_N})


@dataclass
class ExtremaReport:
    samples: int
    max_section_residual: float
    max_gradient_norm: float
    max_critical_value_error: float
    max_grid_value: float
    critical_value_counts: dict[int, int]
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations


def sub2_objective_batch(phi: np.ndarray, t1, t2, t5) -> np.ndarray:
    """Vectorized sub-code objective f(theta_1, theta_2, theta_5)."""
    p1, p2, p3 = phi
    return 0.5 * (np.cos(p2 + 2 * (t1 + t2)) + np.cos(p1 - p3 + 2 * (t2 - t1))
                  + np.cos(p1 + 2 * (t2 + t5)) + np.cos(p2 - p3 + 2 * (t2 - t5))
                  + np.cos(p3 + 2 * (t1 + t5)) + np.cos(p1 - p2 + 2 * (t5 - t1)))


def grid_max_sub2(phi: np.ndarray, resolution: float = TWO_PI / 400) -> float:
    """Largest f over a (theta_1, theta_2) grid, maximizing theta_5 exactly.

    For fixed (theta_1, theta_2) f is A cos(2 theta_5 + phase) + c, so A + c
    bounds every theta_5 grid value from above.
    """
    g = np.arange(0.0, np.pi, resolution)  # period pi in every coordinate
    t1, t2 = np.meshgrid(g, g, indexing="ij")
    f0 = sub2_objective_batch(phi, t1, t2, 0.0)
    fq = sub2_objective_batch(phi, t1, t2, np.pi / 4)
    fh = sub2_objective_batch(phi, t1, t2, np.pi / 2)
    c = 0.5 * (f0 + fh)
    return float((np.hypot(f0 - c, fq - c) + c).max())


def verify_extrema(phases_samples: int | np.ndarray = 100, seed: int = 0, tol: float = 1e-10,
                   table=None) -> ExtremaReport:
    """Check the single-frequency sections, critical points and global maximum of f.

    Args:
        phases_samples: Number of random phase triples or an explicit (m, 3) array.
        seed: RNG seed for the random phases and probe points.
        tol: Tolerance for the analytic checks.
        table: Optional closed-form coefficient table (mutation testing).
    """
    code = two_plaquette_subcode()
    rng = make_rng(seed)
    if np.ndim(phases_samples) == 0:
        phis = rng.uniform(0, TWO_PI, (int(phases_samples), 3))
    else:
        phis = np.atleast_2d(np.asarray(phases_samples, dtype=float))
    violations: list[dict] = []
    worst = {"section": 0.0, "grad": 0.0, "crit": 0.0, "grid": -np.inf}
    counts: Counter = Counter()

    def f_closed(phi, th):
        ctrl = dict(zip(SUB2_QUBITS, th))
        return float(closed_form_expectations(code, phi, ctrl, table).sum())

    for phi in phis:
        # (a) single-frequency sections at random frozen coordinates
        th = rng.uniform(0, np.pi, 3)
        for axis in range(3):
            def g(t, axis=axis):
                x = th.copy()
                x[axis] = t
                return f_closed(phi, x)
            g0, g1, g2 = g(0.0), g(np.pi / 4), g(np.pi / 2)
            c = 0.5 * (g0 + g2)
            A, ph = np.hypot(g0 - c, g1 - c), np.arctan2(-(g1 - c), g0 - c)
            probes = rng.uniform(0, np.pi, 25)
            resid = max(abs(g(t) - (A * np.cos(2 * t + ph) + c)) for t in probes)
            worst["section"] = max(worst["section"], resid)
            if resid > tol:
                violations.append({"check": "section", "phi": phi.tolist(), "axis": axis, "residual": resid})
        # (b, c) critical points on the k lattice
        for k in itertools.product((0, 1), repeat=3):
            tc = critical_point_angles(phi, k)
            gn = float(np.linalg.norm(gradient_f(phi, tc)))
            worst["grad"] = max(worst["grad"], gn)
            if gn > tol:
                violations.append({"check": "gradient", "phi": phi.tolist(), "k": k, "norm": gn})
            fv = f_closed(phi, tc)
            err = abs(fv - critical_value(k))
            worst["crit"] = max(worst["crit"], err)
            counts[int(round(fv))] += 1
            if err > tol:
                violations.append({"check": "critical_value", "phi": phi.tolist(), "k": k, "f": fv})
        # (d) no grid point exceeds the global maximum 3
        gm = grid_max_sub2(phi)
        worst["grid"] = max(worst["grid"], gm)
        if gm > 3.0 + 1e-9:
            violations.append({"check": "grid_max", "phi": phi.tolist(), "f": gm})
    return ExtremaReport(len(phis), worst["section"], worst["grad"], worst["crit"], worst["grid"],
                         dict(sorted(counts.items())), violations)


@dataclass
class DofCount:
    """Distinct quasi-local Z-rotation generators versus phases to remove."""

    per_locality: dict[int, int]
    cumulative: int
    phases_required: int

    @property
    def sufficient(self) -> bool:
        return self.cumulative >= self.phases_required

    @property
    def verdict(self) -> str:
        return "sufficient" if self.sufficient else "insufficient"


def count_quasi_local_dof(code: CodeSpec, max_locality: int | None = None) -> DofCount:
    """Count distinct qubit subsets of size <= max_locality inside some plaquette.

    Subsets shared by several plaquettes (e.g. a common side) count once.
    ``max_locality`` defaults to the largest plaquette size.
    """
    top = max(len(p) for p in code.plaquettes) if max_locality is None else int(max_locality)
    per = {}
    for k in range(1, top + 1):
        seen: set[tuple[int, ...]] = set()
        for p in code.plaquettes:
            seen.update(itertools.combinations(p, k))
        per[k] = len(seen)
    return DofCount(per, sum(per.values()), code.n_phases)


def count_until_sufficient(code: CodeSpec) -> DofCount:
    """Count localities 1, 2, ... and stop at the first one reaching sufficiency."""
    top = max(len(p) for p in code.plaquettes)
    for k in range(1, top + 1):
        dof = count_quasi_local_dof(code, k)
        if dof.sufficient:
            return dof
    return dof
