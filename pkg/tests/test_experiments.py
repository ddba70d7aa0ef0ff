import math

import numpy as np
import pytest

from ns_spectra.errors import ConfigurationError
from ns_spectra.experiments import (
    SweepConfig,
    SweepResult,
    TrialResult,
    band_fraction,
    fit_power_law,
    iterations_to_band,
    mean_frobenius_norm,
    median_sval_per_size,
    min_iterations_for_band,
    out_dim,
    run_sweep,
)
from ns_spectra.gaussian import Shape
from ns_spectra.newton_schulz import (
    DEFAULT_COEFFICIENTS,
    IDENTITY_COEFFICIENTS,
    NsSchedule,
    ns_run,
)

from conftest import gaussian, random_orthogonal

SMALL = SweepConfig(sizes=(8, 16, 32), trials_per_size=3, master_seed=5)


def test_config_validation():
    with pytest.raises(ConfigurationError, match="increasing"):
        SweepConfig(sizes=(64, 32))
    with pytest.raises(ConfigurationError) as info:
        SweepConfig(sizes=(4,))
    assert info.value.field == "sizes"
    with pytest.raises(ConfigurationError):
        SweepConfig(trials_per_size=0)
    with pytest.raises(ConfigurationError):
        SweepConfig(gamma=1.5)
    with pytest.raises(ConfigurationError):
        SweepConfig(tail_threshold=0.0)


def test_out_dim():
    assert out_dim(64, 1.0) == 64
    assert out_dim(10, 0.25) == 3  # 2.5 rounds up
    assert out_dim(8, 0.01) == 1


def test_identity_schedule_keeps_tail():
    cfg = SweepConfig(sizes=(8,), trials_per_size=1, schedule=NsSchedule.constant(IDENTITY_COEFFICIENTS, 1))
    cell = run_sweep(cfg).trials[0]
    assert cell.trace[1].tail_fraction == cell.trace[0].tail_fraction


def _cells(result):
    return [(t.size, t.trial, t.seed, t.frobenius_norm, [r.spectrum.tobytes() for r in t.trace.records])
            for t in result.trials]


def test_sweep_deterministic_and_thread_independent():
    a, b, c = run_sweep(SMALL), run_sweep(SMALL), run_sweep(SMALL, threads=4)
    assert _cells(a) == _cells(b) == _cells(c)
    assert [(t.size, t.trial) for t in a.trials] == [(s, i) for s in (8, 16, 32) for i in range(3)]


def test_aggregates_recomputable():
    result = run_sweep(SMALL)
    agg = result.aggregates()
    for size in SMALL.sizes:
        cells = result.for_size(size)
        tails = [c.trace.final.tail_fraction for c in cells]
        assert agg[size]["tail_fraction[5]_mean"] == pytest.approx(np.mean(tails), abs=1e-15)
        assert agg[size]["tail_fraction[5]_std"] == pytest.approx(np.std(tails), abs=1e-15)
        assert agg[size]["frobenius_norm_mean"] == pytest.approx(np.mean([c.frobenius_norm for c in cells]))
        assert result.mean_tail_fraction(size) == pytest.approx(np.mean(tails))


def test_incomplete_result_detected():
    result = run_sweep(SMALL)
    broken = SweepResult(SMALL, result.trials[:-1])
    with pytest.raises(RuntimeError):
        broken.check_complete()


def _fake_result(spectra_by_size):
    cells = []
    for size, spectra in spectra_by_size.items():
        for trial, m in enumerate(spectra):
            _, trace = ns_run(m, NsSchedule.constant(IDENTITY_COEFFICIENTS, 1))
            cells.append(TrialResult(size, trial, 0, 0.0, trace))
    cfg = SweepConfig(sizes=(8,), trials_per_size=1)
    return SweepResult(cfg, cells)


def test_median_examples():
    assert median_sval_per_size(_fake_result({1: [np.array([[-3.5]])]})) == [(1, 1.0)]
    g = gaussian(20, 20, 4)
    single = median_sval_per_size(_fake_result({20: [g]}))
    doubled = median_sval_per_size(_fake_result({20: [g, g]}))
    assert single == doubled


def test_median_pools_trials():
    a, b = gaussian(10, 10, 1), gaussian(10, 10, 2)
    res = _fake_result({10: [a, b]})
    pooled = np.concatenate([c.trace[0].spectrum for c in res.trials])
    assert median_sval_per_size(res)[0][1] == float(np.median(pooled))


def test_fit_exact_law():
    xs = [64, 128, 256, 512, 1024]
    fit = fit_power_law([(x, 3 * x**-0.5) for x in xs])
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.points_used == 5
    np.testing.assert_allclose(fit.predict(xs), [3 * x**-0.5 for x in xs], rtol=1e-12)


def test_fit_constant():
    fit = fit_power_law([(1, 2.0), (10, 2.0), (100, 2.0)])
    assert fit.slope == 0.0
    assert 0.0 <= fit.r_squared <= 1.0


def test_fit_noisy():
    rng = np.random.default_rng(17)
    xs = np.array([64, 128, 256, 512, 1024], dtype=float)
    ys = xs**-0.5 * (1 + rng.uniform(-0.01, 0.01, xs.size))
    fit = fit_power_law(np.column_stack([xs, ys]))
    assert -0.52 <= fit.slope <= -0.48


def test_fit_errors():
    with pytest.raises(ConfigurationError):
        fit_power_law([(1, 1)])
    with pytest.raises(ConfigurationError):
        fit_power_law([(1, 1), (2, 0)])
    with pytest.raises(ConfigurationError):
        fit_power_law([(-1, 1), (2, 3)])


def test_band_fraction():
    assert band_fraction(np.array([0.69, 0.71, 1.0, 1.29, 1.31]), 0.3) == pytest.approx(0.6)


def test_min_iterations_examples():
    column = random_orthogonal(16, 3)[:, :1] * 4.0
    assert iterations_to_band([column], DEFAULT_COEFFICIENTS, 0.3, 0.99, 5) == 0
    shape = Shape(32, 32)
    assert min_iterations_for_band(shape, IDENTITY_COEFFICIENTS, 0.3, 0.5, 0, 6) is None
    assert min_iterations_for_band(shape, DEFAULT_COEFFICIENTS, 0.999, 0.05, 0, 6) == 0
    t = min_iterations_for_band(shape, DEFAULT_COEFFICIENTS, 0.35, 0.9, 0, 20)
    assert t is not None and t > 0


def test_min_iterations_errors():
    with pytest.raises(ConfigurationError):
        iterations_to_band([np.eye(2)], DEFAULT_COEFFICIENTS, 1.0, 0.5, 3)
    with pytest.raises(ConfigurationError):
        iterations_to_band([np.eye(2)], DEFAULT_COEFFICIENTS, 0.3, 0.0, 3)


@pytest.mark.slow
def test_min_iterations_grow_with_size():
    k = DEFAULT_COEFFICIENTS

    def t(n):
        r = min_iterations_for_band(Shape(n, n), k, 0.35, 0.99, 0, 20)
        return math.inf if r is None else r

    assert t(1024) >= t(128)


@pytest.mark.slow
def test_min_iterations_spec_band_saturates():
    # [0.7, 1.3] does not contain the default polynomial's plateau [0.68, 1.13],
    # so with quantile 0.99 the band is never reached at any size
    k = DEFAULT_COEFFICIENTS
    small = min_iterations_for_band(Shape(128, 128), k, 0.3, 0.99, 0, 20)
    large = min_iterations_for_band(Shape(1024, 1024), k, 0.3, 0.99, 0, 20)
    as_number = [math.inf if r is None else r for r in (small, large)]
    assert as_number[1] >= as_number[0]
    assert small is None and large is None


def test_frobenius_scaling_small():
    for n in (64, 128):
        assert mean_frobenius_norm(Shape(n, n // 2), 16, 3) == pytest.approx(math.sqrt(n * n / 2), rel=0.02)


@pytest.mark.slow
def test_default_sweep_tail_and_median_ratio(default_sweep):
    assert default_sweep.mean_tail_fraction(1024) > default_sweep.mean_tail_fraction(64)
    medians = dict(median_sval_per_size(default_sweep))
    assert medians[256] / medians[1024] == pytest.approx(2.0, rel=0.10)
