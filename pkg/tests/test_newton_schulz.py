import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ns_spectra.errors import ConfigurationError, DegenerateInputError, DimensionError
from ns_spectra.gaussian import GaussianSpec, Shape, derive_trial_seed, generate
from ns_spectra.linalg import normalize_frobenius, singular_values
from ns_spectra.newton_schulz import (
    DEFAULT_COEFFICIENTS,
    IDENTITY_COEFFICIENTS,
    NsCoefficients,
    NsSchedule,
    ns_run,
    ns_step,
    scalar_iterate,
    scalar_polynomial,
)

from conftest import gaussian, random_orthogonal

K = DEFAULT_COEFFICIENTS

# s = 0.1 pushed through five default steps, by direct evaluation of a*s + b*s**3 + c*s**5
TRAJECTORY_FROM_0_1 = [0.1, 0.339695315, 0.992096932738971, 0.7070804126863017, 1.1065648007338518, 0.7121200816580746]


def direct(s, k):
    return k.a * s + k.b * s**3 + k.c * s**5


def test_coefficient_validation():
    with pytest.raises(ConfigurationError):
        NsCoefficients(1.0, float("inf"), 0.0)
    assert NsCoefficients.parse("3.4445, -4.7750, 2.0315") == K
    with pytest.raises(ConfigurationError):
        NsCoefficients.parse("1,2")


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        NsSchedule((K,), 0)
    with pytest.raises(ConfigurationError):
        NsSchedule((K, K), 3)
    sched = NsSchedule((K, IDENTITY_COEFFICIENTS, K), 3)
    assert list(sched) == [K, IDENTITY_COEFFICIENTS, K]
    assert list(NsSchedule.constant(K, 4)) == [K] * 4


def test_scalar_polynomial_examples():
    assert scalar_polynomial(0.0, K) == 0.0
    # a + b + c; the reference triple lands at 0.701, not at 1
    assert scalar_polynomial(1.0, K) == pytest.approx(0.701, abs=1e-12)
    for t in (0.05, 0.3, 0.9, 1.7):
        assert scalar_polynomial(-t, K) == -scalar_polynomial(t, K)
        assert scalar_polynomial(t, K) == pytest.approx(direct(t, K), rel=1e-14)


def test_scalar_iterate():
    assert scalar_iterate(0.0, NsSchedule.constant(K, 5)) == [0.0] * 6
    assert scalar_iterate(0.37, NsSchedule.constant(IDENTITY_COEFFICIENTS, 4)) == [0.37] * 5
    traj = scalar_iterate(0.1, NsSchedule.constant(K, 5))
    np.testing.assert_allclose(traj, TRAJECTORY_FROM_0_1, rtol=1e-13)


def test_ns_step_identity_polynomial():
    g = gaussian(9, 4, 0)
    np.testing.assert_array_equal(ns_step(g, IDENTITY_COEFFICIENTS), g)


def test_ns_step_on_identity_matrix():
    k = NsCoefficients(0.3, -0.2, 0.15)
    np.testing.assert_allclose(ns_step(np.eye(5), k), (k.a + k.b + k.c) * np.eye(5), atol=1e-15)


def test_ns_step_scalar_case():
    k = NsCoefficients(2.0, -3.0, 5.0)
    assert ns_step(np.array([[0.5]]), k)[0, 0] == pytest.approx(2.0 / 2 - 3.0 / 8 + 5.0 / 32, abs=1e-15)


def test_ns_step_rejects_wide():
    with pytest.raises(DimensionError):
        ns_step(np.zeros((2, 3)), K)


def test_ns_step_diagonal_oracle_64x32():
    g = normalize_frobenius(gaussian(64, 32, 5))
    expected = np.sort(np.abs(direct(singular_values(g), K)))[::-1]
    np.testing.assert_allclose(singular_values(ns_step(g, K)), expected, rtol=0, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 40),
    st.integers(1, 40),
    st.integers(0, 2**32),
    st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)),
)
def test_diagonal_oracle_property(rows, cols, seed, abc):
    k = NsCoefficients(*abc)
    g = normalize_frobenius(gaussian(max(rows, cols), min(rows, cols), seed))
    expected = np.sort(np.abs(direct(singular_values(g), k)))[::-1]
    np.testing.assert_allclose(singular_values(ns_step(g, k)), expected, rtol=0, atol=1e-9)


def test_odd_symmetry_exact():
    g = normalize_frobenius(gaussian(20, 12, 8))
    np.testing.assert_array_equal(ns_step(-g, K), -ns_step(g, K))


def test_ns_run_trace_shape_and_step0():
    g = gaussian(30, 20, 3)
    out, trace = ns_run(g, NsSchedule.constant(K, 4), 0.6)
    assert len(trace) == 5
    assert [r.iteration for r in trace.records] == list(range(5))
    np.testing.assert_allclose(trace[0].spectrum, singular_values(normalize_frobenius(g)), rtol=1e-14)
    np.testing.assert_allclose(trace.final.spectrum, singular_values(out), rtol=1e-14)
    for r in trace.records:
        assert 0.0 <= r.tail_fraction <= 1.0
        assert r.min_sval <= r.median_sval <= r.max_sval


def test_ns_run_trace_consistency():
    _, trace = ns_run(gaussian(128, 96, 4), NsSchedule.constant(K, 6), 0.6)
    for prev, cur in zip(trace.records, trace.records[1:]):
        expected = np.sort(np.abs(direct(prev.spectrum, K)))[::-1]
        np.testing.assert_allclose(cur.spectrum, expected, rtol=0, atol=1e-8)


def test_ns_run_identity_schedule():
    g = gaussian(12, 7, 2)
    out, _ = ns_run(g, NsSchedule.constant(IDENTITY_COEFFICIENTS, 1))
    np.testing.assert_array_equal(out, normalize_frobenius(g))


def test_ns_run_wide_input_transposed_back():
    g = gaussian(6, 15, 1)
    out, trace = ns_run(g, NsSchedule.constant(K, 2))
    assert out.shape == g.shape
    tall_out, _ = ns_run(g.T, NsSchedule.constant(K, 2))
    np.testing.assert_array_equal(out, tall_out.T)


def test_ns_run_errors():
    with pytest.raises(DegenerateInputError):
        ns_run(np.zeros((4, 4)), NsSchedule())
    with pytest.raises(ConfigurationError):
        ns_run(np.eye(3), NsSchedule(), tail_threshold=1.0)


@pytest.mark.parametrize("cols", [1, 4, 16])
def test_flat_spectrum_has_no_tail_below_plateau(cols):
    q = random_orthogonal(32, cols)[:, :cols] * 7.0
    schedule = NsSchedule.constant(K, 5)
    plateau = scalar_iterate(1.0 / math.sqrt(cols), schedule)
    below = 0.95 * min(plateau)
    _, trace = ns_run(q, schedule, tail_threshold=below)
    assert all(r.tail_fraction == 0.0 for r in trace.records)
    for r, value in zip(trace.records, plateau):
        np.testing.assert_allclose(r.spectrum, abs(value), rtol=1e-12)


def test_larger_matrix_has_heavier_final_tail():
    # one 64x64 spectrum moves its tail fraction in steps of 1/64, so compare trial means
    schedule = NsSchedule.constant(K, 5)

    def mean_tail(n, size_index):
        return np.mean([
            ns_run(generate(GaussianSpec(Shape(n, n), derive_trial_seed(0, size_index, t))), schedule, 0.6)[1]
            .final.tail_fraction
            for t in range(64)
        ])

    assert mean_tail(256, 1) > mean_tail(64, 0)


@pytest.mark.parametrize("n", [64, 256])
def test_more_iterations_relieve_tail(n):
    _, trace = ns_run(gaussian(n, n, 21), NsSchedule.constant(K, 9), 0.6)
    tails = [trace[t].tail_fraction for t in range(5, 10)]
    assert all(b <= a for a, b in zip(tails, tails[1:]))
