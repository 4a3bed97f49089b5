"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) with the
measured quantity and the tolerance it is judged against.
"""

import itertools
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from phaseopt.analysis import count_quasi_local_dof, monte_carlo_convergence, verify_extrema
from phaseopt.codes import build_code, two_plaquette_subcode
from phaseopt.expectations import closed_form_expectations, gradient_f, statevector_expectations, sum_objective
from phaseopt.measurement import NoiseParams, make_rng
from phaseopt.optimizer import ScanPolicy, optimize, optimize_batch, z_parities

RUNS = 10_000
SEED = 1


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def trajectories():
    """Criteria 4-5 runs with full theta histories (shared by criterion 10)."""
    out = {}
    for name, variant in (("sub2", "individual"), ("d3", "individual"), ("d3", "sum")):
        code = build_code(name)
        phi = make_rng(SEED).uniform(0, 2 * np.pi, (RUNS, code.n_phases))
        t0 = time.perf_counter()
        stats = monte_carlo_convergence(code, variant, RUNS, ScanPolicy(), SEED)
        elapsed = time.perf_counter() - t0
        hist = optimize_batch(code, phi, ScanPolicy(objective=variant), keep_history=True)
        out[(name, variant)] = (code, phi, stats, elapsed, hist)
    return out


def test_criterion_01_oracle_equivalence():
    rng = make_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for code in (build_code("d3"), two_plaquette_subcode()):
        for _ in range(1000):
            phi = rng.uniform(0, 2 * np.pi, code.n_phases)
            ctrl = dict(zip(code.control_qubits, rng.uniform(0, 2 * np.pi, len(code.control_qubits))))
            err = np.max(np.abs(closed_form_expectations(code, phi, ctrl) - statevector_expectations(code, phi, ctrl)))
            worst = max(worst, float(err))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-10 and elapsed < 5, f"max |closed - statevector| = {worst:.2e} (tol 1e-10), {elapsed:.2f} s (< 5 s)")


def test_criterion_02_extrema_suite():
    t0 = time.perf_counter()
    rep = verify_extrema(100, seed=202, tol=1e-10)
    elapsed = time.perf_counter() - t0
    ok = (rep.max_gradient_norm <= 1e-10 and rep.max_critical_value_error <= 1e-10
          and rep.max_grid_value <= 3 + 1e-9 and rep.ok and elapsed < 30)
    report(2, ok, f"max |grad| = {rep.max_gradient_norm:.1e}, max |f - {{3,-1}}| = {rep.max_critical_value_error:.1e} "
                  f"(tol 1e-10), grid max f = {rep.max_grid_value:.8f} (<= 3 + 1e-9), "
                  f"violations = {len(rep.violations)}, {elapsed:.1f} s (< 30 s)")


def test_criterion_03_gradient_check():
    code = two_plaquette_subcode()
    rng = make_rng(303)
    worst = 0.0
    for _ in range(1000):
        phi = rng.uniform(0, 2 * np.pi, 3)
        th = rng.uniform(0, 2 * np.pi, 3)
        num = np.zeros(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1e-6
            fp = sum_objective(code, phi, dict(zip((0, 1, 4), th + e)))
            fm = sum_objective(code, phi, dict(zip((0, 1, 4), th - e)))
            num[i] = (fp - fm) / 2e-6
        worst = max(worst, float(np.max(np.abs(num - gradient_f(phi, th)))))
    report(3, worst <= 1e-6, f"max |grad - central difference| = {worst:.2e} (tol 1e-6)")


def test_criterion_04_two_plaquette(trajectories):
    _, _, s, elapsed, _ = trajectories[("sub2", "individual")]
    ok = s.mean_n == 1.0 and s.max_n == 1 and s.n_unconverged == 0 and elapsed < 60
    report(4, ok, f"{s.runs} runs: mean n = {s.mean_n}, max n = {s.max_n}, unconverged = {s.n_unconverged}, "
                  f"{elapsed:.1f} s (< 60 s)")


def test_criterion_05_three_plaquette(trajectories):
    _, _, ind, t_ind, _ = trajectories[("d3", "individual")]
    _, _, sm, t_sum, _ = trajectories[("d3", "sum")]
    ok_ind = 2.06 <= ind.mean_n <= 2.26 and 0.46 <= ind.std_n <= 0.66
    ok_sum = 2.15 <= sm.mean_n <= 2.35 and 0.40 <= sm.std_n <= 0.60
    ok_max = ind.max_n <= 6 and sm.max_n <= 6 and ind.n_unconverged == sm.n_unconverged == 0
    elapsed = t_ind + t_sum
    report(5, ok_ind and ok_sum and ok_max and elapsed < 600,
           f"individual mean {ind.mean_n:.4f} in [2.06, 2.26], std {ind.std_n:.4f} in [0.46, 0.66], max {ind.max_n}; "
           f"sum mean {sm.mean_n:.4f} in [2.15, 2.35], std {sm.std_n:.4f} in [0.40, 0.60], max {sm.max_n} "
           f"(bound 6; <= 5 observed: {max(ind.max_n, sm.max_n) <= 5}), {elapsed:.1f} s")


def test_criterion_06_monotone_sum():
    code = build_code("d3")
    phi = make_rng(606).uniform(0, 2 * np.pi, (1000, 7))
    res = optimize_batch(code, phi, ScanPolicy(objective="sum"), keep_history=True)
    worst = float(np.min(np.diff(np.array(res.objective_history), axis=0)))
    report(6, worst >= -1e-12, f"1000 runs, smallest per-step change of f = {worst:.2e} (>= 0 up to 1e-12)")


def test_criterion_07_dof_counts():
    d5 = count_quasi_local_dof(build_code("d5"), 5)
    d7 = count_quasi_local_dof(build_code("d7"))
    d3 = count_quasi_local_dof(build_code("d3"), 1)
    ok5 = (d5.per_locality == {1: 17, 2: 58, 3: 84, 4: 77, 5: 56} and d5.cumulative == 292
           and d5.phases_required == 255 and d5.sufficient)
    ok7 = d7.cumulative == 875 and d7.phases_required == 32767 and not d7.sufficient
    ok3 = d3.cumulative == 7 and d3.phases_required == 7 and d3.sufficient
    report(7, ok5 and ok7 and ok3,
           f"d5 {d5.per_locality} -> {d5.cumulative}/{d5.phases_required} {d5.verdict} [{'ok' if ok5 else 'mismatch'}]; "
           f"d7 {d7.cumulative}/{d7.phases_required} {d7.verdict}, expected 875 [{'ok' if ok7 else 'mismatch'}]; "
           f"d3 {d3.cumulative}/{d3.phases_required} {d3.verdict} [{'ok' if ok3 else 'mismatch'}]")


def test_criterion_08_werner_invariance():
    code = build_code("d3")
    phis = make_rng(808).uniform(0, 2 * np.pi, (100, 7))
    worst_t, worst_e = 0.0, 0.0
    for phi in phis:
        base = optimize(code, phi)
        for p in (0.1, 0.5, 0.9):
            r = optimize(code, phi, NoiseParams(p=p))
            dt = max(abs(np.mod(r.final_theta[q] - base.final_theta[q] + np.pi / 2, np.pi) - np.pi / 2)
                     for q in code.control_qubits)
            de = np.max(np.abs(np.array(r.final_expectations) - (1 - p) * np.array(base.final_expectations)))
            worst_t, worst_e = max(worst_t, dt), max(worst_e, float(de))
    report(8, worst_t <= 1e-9 and worst_e <= 1e-9,
           f"max |theta_p - theta_0| = {worst_t:.1e}, max |<S>_p - (1-p)<S>_0| = {worst_e:.1e} (tol 1e-9)")


def test_criterion_09_shot_noise():
    code = build_code("d3")
    policy = ScanPolicy(mode="grid", grid_step=2 * np.pi / 10, threshold=0.1, threshold_metric="delta2")
    converged, finals = 0, []
    for i in range(100):
        phi = make_rng(1000 + i).uniform(0, 2 * np.pi, 7)
        r = optimize(code, phi, NoiseParams(p=0.1, shots=200, seed=i), policy)
        converged += r.converged
        finals.append(np.mean(r.final_expectations))
    finals = np.array(finals)
    mean, sem = finals.mean(), finals.std(ddof=1) / np.sqrt(finals.size)
    shot_se = np.sqrt((1 - 0.9**2) / 200)
    ok_conv = converged >= 95
    ok_mean = abs(mean - 0.9) <= 3 * sem
    report(9, ok_conv and ok_mean,
           f"converged {converged}/100 (>= 95) [{'ok' if ok_conv else 'fail'}]; mean final <S> = {mean:.4f}, "
           f"|mean - 0.9| = {abs(mean - 0.9):.4f} vs 3 x SEM over runs = {3 * sem:.4f} [{'ok' if ok_mean else 'fail'}] "
           f"(info: 3 x single-estimate shot SE = {3 * shot_se:.4f})")


def test_criterion_10_z_sector(trajectories):
    worst = 0.0
    n_states = 0
    for code, phi, _, _, hist in trajectories.values():
        bits = code.basis_bits  # (2^P, n)
        signs = np.stack([1 - 2 * (bits[:, list(p)].sum(axis=1) % 2) for p in code.plaquettes], axis=1)
        phi_full = np.concatenate([np.zeros((phi.shape[0], 1)), phi], axis=1)
        spins = 2 * bits - 1  # bit 0 -> -1, bit 1 -> +1
        before = (np.abs(np.exp(1j * phi_full) / np.sqrt(phi_full.shape[1])) ** 2) @ signs
        for th in hist.theta_history:
            amps = np.exp(1j * (phi_full + th @ spins.T)) / np.sqrt(phi_full.shape[1])
            after = (np.abs(amps) ** 2) @ signs
            worst = max(worst, float(np.max(np.abs(after - before))))
            n_states += after.shape[0]
        for i in range(20):  # spot check through the sparse-state route
            for th in hist.theta_history:
                z = z_parities(code, phi[i], {q: th[i, q] for q in code.control_qubits})
                worst = max(worst, float(np.max(np.abs(z - 1.0))))
    report(10, worst <= 1e-12, f"{n_states} rotated states, max |Z parity change| = {worst:.1e} "
                               f"(floating-point exact, tol 1e-12)")
