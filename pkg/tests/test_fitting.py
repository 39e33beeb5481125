import numpy as np
import pytest

from brownbeads.experiments import (arcsine_tail, levy_first_passage_oracle, sqrt_dt_extrapolate,
                                    stable_overshoot_oracle)
from brownbeads.fitting import binomial_log_stderr, fit_power_law, tail_fit
from brownbeads.sim import make_stream


def test_weighted_fit_matches_numpy_polyfit():
    rng = np.random.default_rng(0)
    x = np.geomspace(1, 100, 8)
    p = 3 * x**-0.7 * np.exp(rng.normal(0, 0.05, 8))
    w = rng.uniform(1, 5, 8)
    fit = fit_power_law(x, p, w)
    ref = np.polyfit(np.log(x), np.log(p), 1, w=np.sqrt(w))
    assert fit.slope == pytest.approx(ref[0]) and fit.intercept == pytest.approx(ref[1])
    assert fit.alpha == -fit.slope


def test_unweighted_error_matches_scipy():
    from scipy.stats import linregress
    rng = np.random.default_rng(1)
    x = np.geomspace(2, 64, 6)
    p = x**-0.5 * np.exp(rng.normal(0, 0.1, 6))
    fit = fit_power_law(x, p)
    ref = linregress(np.log(x), np.log(p))
    assert fit.slope == pytest.approx(ref.slope) and fit.stderr == pytest.approx(ref.stderr)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 0, 2])
    with pytest.raises(ValueError):
        fit_power_law([2, 2, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 2, 3], [1, -1, 1])


def test_binomial_log_stderr():
    assert binomial_log_stderr(0.5, 100) == pytest.approx(0.1)
    assert binomial_log_stderr(1.0, 10) == 0


def test_tail_fit_on_exact_pareto():
    u = make_stream(3).random(200_000)
    x = u ** (-1 / 0.5)
    fit = tail_fit(x, np.geomspace(2, 100, 8))
    assert abs(fit.slope + 0.5) < 3 * fit.stderr + 0.01
    with pytest.raises(ValueError):
        tail_fit([1.0, 2.0], [1.5, 10.0, 20.0])


def test_tail_fit_counts_infinite_samples():
    fit = tail_fit(np.r_[np.geomspace(1, 1e3, 1000), [np.inf] * 10], [2.0, 10.0, 100.0])
    assert fit.slope < 0


def test_overshoot_oracle_matches_arcsine_law():
    x = stable_overshoot_oracle(200_000, make_stream(4))
    assert np.all(x >= 1)
    for q in (1.5, 4.0, 20.0):
        p = (x > q).mean()
        assert p == pytest.approx(arcsine_tail(q), abs=4 * np.sqrt(p * (1 - p) / x.size))


def test_levy_oracle_tail():
    # P(T > t) = erf(1 / sqrt(2 t)) for the first passage of BM to 1
    from scipy.special import erf
    t = levy_first_passage_oracle(20_000, 1e-3, 50.0, make_stream(5))
    for s in (2.0, 10.0):
        p = (t > s).mean()
        exact = erf(1 / np.sqrt(2 * s))
        # grid monitoring overshoots the true passage time slightly
        assert p == pytest.approx(exact, abs=4 * np.sqrt(p * (1 - p) / t.size) + 0.02)


def test_sqrt_dt_extrapolation_is_exact_on_lines():
    dts = np.array([1e-2, 2.5e-3])
    vals = 0.7 + 3.0 * np.sqrt(dts)
    v, e = sqrt_dt_extrapolate(dts, vals, np.array([0.01, 0.01]))
    assert v == pytest.approx(0.7) and e == pytest.approx(np.hypot(2, 1) * 0.01)
    assert sqrt_dt_extrapolate(np.array([1e-2]), np.array([0.3]), np.array([0.1])) == (0.3, 0.1)


def test_fitter_on_synthetic_overshoot():
    # far enough out that the arcsine law is close to its x^-1/2 asymptote
    x = stable_overshoot_oracle(200_000, make_stream(6))
    fit = tail_fit(x, np.geomspace(4, 400, 8))
    assert abs(fit.slope + 0.5) <= 0.05
    ref = fit_power_law(np.geomspace(4, 400, 8), arcsine_tail(np.geomspace(4, 400, 8)))
    assert abs(fit.slope - ref.slope) < 3 * fit.stderr + 0.005
