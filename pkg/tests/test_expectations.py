import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseopt.codes import build_code
from phaseopt.errors import CapacityError
from phaseopt.expectations import (
    closed_form_expectation,
    closed_form_expectations,
    critical_point_angles,
    critical_points,
    critical_value,
    gradient_f,
    oracle_expectations,
    section_of,
    statevector_expectations,
    sum_objective,
)

angle = st.floats(0, 2 * np.pi, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(angle, min_size=7, max_size=7), st.lists(angle, min_size=7, max_size=7))
def test_d3_closed_form_matches_oracles(d3, phi, th):
    ctrl = dict(zip(d3.control_qubits, th))
    a = closed_form_expectations(d3, phi, ctrl)
    np.testing.assert_allclose(a, statevector_expectations(d3, phi, ctrl), atol=1e-10)
    np.testing.assert_allclose(a, oracle_expectations(d3, phi, ctrl), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(angle, min_size=3, max_size=3), st.lists(angle, min_size=3, max_size=3))
def test_sub2_closed_form_matches_statevector(sub2, phi, th):
    ctrl = dict(zip((0, 1, 4), th))
    np.testing.assert_allclose(closed_form_expectations(sub2, phi, ctrl),
                               statevector_expectations(sub2, phi, ctrl), atol=1e-10)


def test_closed_form_examples(d3, sub2):
    for pid in sub2.products:
        assert closed_form_expectation(sub2, pid, [0, 0, 0]) == pytest.approx(1.0)
    assert closed_form_expectation(sub2, (0,), [np.pi, 0, 0]) == pytest.approx(0.0, abs=1e-15)
    assert sum_objective(sub2, [0, 0, 0]) == pytest.approx(3.0)
    assert sum_objective(d3, np.zeros(7)) == pytest.approx(7.0)


def test_critical_point_minimum(sub2):
    phi = np.array([0.4, 1.3, 2.9])
    k = (1, 0, 0)  # k1+k2 odd, k1+k3 odd, k2+k3 even
    assert sum_objective(sub2, phi, critical_points(phi, k)) == pytest.approx(-1.0, abs=1e-12)
    assert critical_value(k) == -1


def test_no_closed_form_for_larger_codes():
    with pytest.raises(CapacityError):
        closed_form_expectation(build_code("d5"), (0,), np.zeros(255))


def test_section_examples(sub2, d3):
    # S1 + S1S2 along theta_1 at phi = 0: 2 cos(2 theta_1)
    sec = section_of(sub2, [(0,), (0, 1)], [0, 0, 0], None, 0)
    assert sec.amplitude == pytest.approx(2.0) and sec.offset == pytest.approx(0.0, abs=1e-15)
    # S2 does not contain qubit 1
    sec = section_of(sub2, [(1,)], [0.3, 1.1, 2.0], None, 0)
    assert sec.amplitude == pytest.approx(0.0, abs=1e-15)
    sec = section_of(sub2, [(0,)], [0.3, 1.1, 2.0], {0: 0.2, 1: 0.0, 4: 0.7}, 1)
    assert sec.amplitude <= 1.0
    assert sec(0.4) == pytest.approx(sec(0.4 + np.pi))


@settings(max_examples=40, deadline=None)
@given(st.lists(angle, min_size=7, max_size=7), st.lists(angle, min_size=7, max_size=7), st.integers(0, 6),
       st.floats(0, np.pi))
def test_sections_are_single_frequency(d3, phi, th, c, t):
    ctrl = dict(zip(d3.control_qubits, th))
    q = d3.control_qubits[c]
    sec = section_of(d3, None, phi, ctrl, q)
    ctrl[q] = t
    assert sec(t) == pytest.approx(sum_objective(d3, phi, ctrl), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(angle, min_size=3, max_size=3), st.lists(angle, min_size=3, max_size=3))
def test_gradient_finite_differences(sub2, phi, th):
    th = np.array(th)
    num = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1e-6
        fp = sum_objective(sub2, phi, dict(zip((0, 1, 4), th + e)))
        fm = sum_objective(sub2, phi, dict(zip((0, 1, 4), th - e)))
        num[i] = (fp - fm) / 2e-6
    np.testing.assert_allclose(gradient_f(phi, th), num, atol=1e-6)


def test_gradient_zero_at_optimum():
    np.testing.assert_allclose(gradient_f([0, 0, 0], [0, 0, 0]), 0.0, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(angle, min_size=3, max_size=3))
def test_critical_points(sub2, phi):
    for k in itertools.product((0, 1), repeat=3):
        tc = critical_point_angles(phi, k)
        assert np.linalg.norm(gradient_f(phi, tc)) < 1e-10
        assert sum_objective(sub2, phi, dict(zip((0, 1, 4), tc))) == pytest.approx(critical_value(k), abs=1e-10)


def test_critical_point_examples(sub2):
    np.testing.assert_allclose(critical_point_angles([0, 0, 0]), 0.0)
    np.testing.assert_allclose(critical_point_angles([np.pi / 2] * 3), [-np.pi / 8] * 3)
    # grid search oracle at resolution 2 pi / 400
    g = np.arange(0, np.pi, 2 * np.pi / 400)
    best = max(sum_objective(sub2, [np.pi / 2] * 3, {0: a, 1: b, 4: c})
               for a, b, c in itertools.product(g[::5], repeat=3))
    assert best <= 3 + 1e-9
    assert sum_objective(sub2, [np.pi / 2] * 3, critical_points([np.pi / 2] * 3)) == pytest.approx(3.0)
    assert critical_value((1, 0, 0)) == -1
    assert sorted(critical_value(k) for k in itertools.product((0, 1), repeat=3)) == [-1] * 6 + [3] * 2
