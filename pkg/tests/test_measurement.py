import numpy as np
import pytest

from phaseopt.codes import logical_state
from phaseopt.core_state import apply_z_rotations
from phaseopt.errors import DomainError
from phaseopt.expectations import statevector_expectations
from phaseopt.measurement import NoiseParams, make_rng, sample_estimates, werner_expectation


def test_werner_examples():
    assert werner_expectation(1.0, 0.0) == 1.0
    assert werner_expectation(0.3, 1.0) == 0.0
    assert werner_expectation(0.8, 0.25) == pytest.approx(0.6)
    with pytest.raises(DomainError):
        werner_expectation(0.5, 1.5)
    with pytest.raises(DomainError):
        NoiseParams(p=-0.1)
    with pytest.raises(DomainError):
        NoiseParams(shots=0)


def test_analytic_estimates(d3):
    s = logical_state(d3, np.zeros(7))
    ops = d3.product_supports()
    np.testing.assert_allclose(sample_estimates(s, ops, NoiseParams()), 1.0, atol=1e-14)
    assert sample_estimates(s, ops, NoiseParams(p=1.0)) == [0.0] * 7


def test_shot_estimates_ideal(d3):
    s = logical_state(d3, np.zeros(7))
    est = sample_estimates(s, d3.product_supports(), NoiseParams(shots=200, seed=3))
    assert all(abs(e - 1) <= 4 / np.sqrt(200) for e in est)


def test_seed_determinism(d3):
    s = logical_state(d3, np.arange(7.0))
    noise = NoiseParams(p=0.2, shots=100, seed=9)
    assert sample_estimates(s, d3.product_supports(), noise) == sample_estimates(s, d3.product_supports(), noise)


def test_sampler_unbiased(d3):
    phi = make_rng(5).uniform(0, 2 * np.pi, 7)
    ctrl = dict(zip(d3.control_qubits, make_rng(6).uniform(0, np.pi, 7)))
    state = apply_z_rotations(logical_state(d3, phi), ctrl)
    p, shots = 0.3, 20000
    est = np.array(sample_estimates(state, d3.product_supports(), NoiseParams(p=p, shots=shots, seed=1)))
    exact = (1 - p) * statevector_expectations(d3, phi, ctrl)
    assert np.all(np.abs(est - exact) < 5 / np.sqrt(shots))


def test_shot_coverage():
    # the 3-standard-error band around the true value holds for ~99% of seeds
    from phaseopt import build_code
    code = build_code("d3")
    phi = make_rng(2).uniform(0, 2 * np.pi, 7)
    state = logical_state(code, phi)
    exact = statevector_expectations(code, phi)
    se = np.sqrt((1 - exact**2) / 200)
    hits = []
    for seed in range(300):
        est = np.array(sample_estimates(state, code.product_supports(), NoiseParams(shots=200, seed=seed)))
        hits.append(np.abs(est - exact) <= 3 * se + 1e-12)
    assert np.mean(hits) > 0.98
