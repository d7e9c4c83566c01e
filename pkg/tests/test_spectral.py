import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturmkit.cf import ContinuedFraction
from sturmkit.errors import ConfigError, ContractError
from sturmkit.spectral import (approximate_spectrum, certified_bound, envelope_line,
                               fresh_violation, growth_fit, hypothesis_warnings,
                               intersect_bands, lyapunov_along_phase, lyapunov_estimate,
                               spectrum_proxy, subadditive_limit)
from sturmkit.transfer import sn_log_abs_traces, word_product
from sturmkit.words import RotationParams, Word, c_prefix, subwords

FIB = ContinuedFraction.preset("fibonacci")
GOLDEN = (math.sqrt(5) - 1) / 2


def test_free_spectrum_is_one_interval():
    s = approximate_spectrum(0.0, FIB, 8, tol=1e-9)
    assert math.isclose(s.bands[0][0], -2.0, abs_tol=1e-6)
    assert math.isclose(s.bands[-1][1], 2.0, abs_tol=1e-6)
    assert math.isclose(s.total_width, 4.0, abs_tol=1e-5)


def test_bands_satisfy_the_trace_condition_and_shrink():
    coarse = approximate_spectrum(1.0, FIB, 6)
    fine = approximate_spectrum(1.0, FIB, 12)
    assert fine.total_width < coarse.total_width
    assert len(fine.bands) > len(coarse.bands)
    mids = np.array(fine.midpoints())
    assert np.all(sn_log_abs_traces(1.0, mids, FIB, 12) <= math.log(2 + 1e-9))
    for lo, hi in fine.bands:
        assert np.all(sn_log_abs_traces(1.0, [lo, hi], FIB, 12) <= math.log(2 + 1e-6))


def test_spectrum_rejects_bad_arguments():
    with pytest.raises(ConfigError):
        approximate_spectrum(1.0, FIB, 1)
    with pytest.raises(ConfigError):
        approximate_spectrum(1.0, FIB, 6, window=(1.0, -1.0))


def test_band_helpers():
    assert intersect_bands([(0, 2), (3, 5)], [(1, 4)]) == [(1, 2), (3, 4)]
    s = spectrum_proxy(1.0, FIB, 8)
    assert s.contains(s.midpoints()[0])
    assert s.distance(10.0) > 0
    assert s.to_json()["level"] == 8
    assert len(s.widest(3)) == 3


def test_lyapunov_zero_for_free_operator_inside_band():
    est = lyapunov_estimate(0.0, 0.0, FIB, 20)
    assert est.gamma <= 1e-12


def test_lyapunov_positive_off_spectrum():
    est = lyapunov_estimate(1.0, 5.0, FIB, 20)
    assert est.gamma > 1.0
    assert est.converged
    s = approximate_spectrum(1.0, FIB, 12)
    for E in (-3.5, 3.5):
        assert s.distance(E) > 0.1
        assert lyapunov_estimate(1.0, E, FIB, 18).gamma >= 0.1


def test_sandwich_of_upper_bounds():
    est = lyapunov_estimate(1.0, 0.4 + 0.3j, FIB, 18)
    assert all(a >= b - 1e-15 for a, b in zip(est.inf_f, est.inf_f[1:]))
    assert all(f >= i for f, i in zip(est.f_upper, est.inf_f))
    assert est.gamma == est.inf_f[-1]
    rows = list(est.rows())
    assert rows[0]["n"] == 1 and rows[-1]["n"] == 18


def test_subadditive_limit_counts():
    assert subadditive_limit(len, FIB, 20).limit == 1.0
    ones = subadditive_limit(lambda w: str(w).count("1"), FIB, 25)
    assert abs(ones.limit - GOLDEN) < 1e-4


def test_contract_violation_detected():
    with pytest.raises(ContractError):
        subadditive_limit(lambda w: len(w) ** 2, FIB, 10, spot_checks=20)
    with pytest.raises(ContractError):
        subadditive_limit(lambda w: -1.0, FIB, 10, spot_checks=5)


def test_large_coefficient_warnings():
    cf = ContinuedFraction((1, 200, 1, 1, 1, 1, 1, 1, 1, 1))
    assert hypothesis_warnings(cf, 5)
    assert not hypothesis_warnings(FIB, 30)
    with pytest.warns(UserWarning):
        subadditive_limit(len, cf, 4)


def test_phase_average_matches_standard_word_estimate():
    params = RotationParams(FIB, 0.3)
    rows = lyapunov_along_phase(1.0, 2 + 0.5j, params, [100, 1000, 20000])
    gamma = lyapunov_estimate(1.0, 2 + 0.5j, FIB, 24).gamma
    assert abs(rows[-1][1] - gamma) < 2e-2
    with pytest.raises(ConfigError):
        lyapunov_along_phase(1.0, 0.0, params, [0])


def test_envelope_line_lies_above_points():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 5, 100)
    y = 0.7 * x + rng.normal(0, 0.3, 100)
    c, mu = envelope_line(x, y)
    assert np.all(y <= c + mu * x + 1e-12)
    assert mu >= 0


@pytest.fixture(scope="module")
def fit():
    return growth_fit(1.0, FIB, [0.0, 1.2], 2000, sample_count=4, seed=5)


def test_growth_fit_covers_samples_and_fresh_draws(fit):
    assert fit.max_violation <= 1e-9
    assert fresh_violation(fit, FIB, seed=99) <= 1e-9
    assert fit.mu == 2 * fit.prefix_mu


def test_free_operator_grows_slowly():
    f = growth_fit(0.0, FIB, [1.0], 3000, sample_count=3)
    assert f.prefix_mu < 0.05 or f.empirical_mu < 1.05


def test_exhaustive_short_factors_under_envelope(fit):
    for ell in range(1, 13):
        for w in subwords(FIB, ell):
            for E in fit.energies:
                assert word_product(1.0, E, w).log_norm() <= fit.log_C + fit.mu * math.log(ell) + 1e-9


def test_certified_bound_example(fit):
    w = c_prefix(FIB, 1500)[333:1333]
    cb = certified_bound(1.0, 1.2, w, FIB, fit)
    assert cb.log_norm <= cb.refined_log_bound + 1e-9 <= cb.log_bound + 2e-9
    assert cb.witness["case"] in {"prefix", "short-suffix", "reversed-suffix"}
    with pytest.raises(ConfigError):
        certified_bound(1.0, 1.2, c_prefix(FIB, 3000), FIB, fit)


@settings(max_examples=40)
@given(st.integers(0, 6000), st.integers(1, 2000))
def test_certified_bound_dominates(fit, start, ell):
    w = c_prefix(FIB, start + ell)[start:]
    cb = certified_bound(1.0, 0.0, w, FIB, fit)
    assert cb.log_norm <= cb.log_bound + 1e-9
