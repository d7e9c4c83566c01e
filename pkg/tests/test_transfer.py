import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sturmkit._backend import BACKENDS
from sturmkit.cf import ContinuedFraction
from sturmkit.errors import ConfigError, DepthError
from sturmkit.transfer import (TransferProduct, local_matrix, norm2x2, prefix_log_norms,
                               reversed_product, sn_log_abs_traces, sn_product, sn_products,
                               word_product)
from sturmkit.words import Word, build_sn, c_prefix

FIB = ContinuedFraction.preset("fibonacci")

lams = st.floats(0.0, 4.0)
reals = st.floats(-4.0, 4.0)
energies = st.builds(complex, reals, st.floats(-1.0, 1.0))
words = st.text("01", min_size=1, max_size=300).map(Word)


def direct(lam, E, w):
    mats = [local_matrix(lam, E, int(c)) for c in str(w)][::-1]
    return mats[0] if len(mats) == 1 else np.linalg.multi_dot(mats)


def test_hand_computed_product():
    # T(0) @ T(1) with lam = 1, E = 0
    p = word_product(1.0, 0.0, Word("10"))
    assert np.allclose(p.true_matrix(), [[-1, 0], [-1, -1]])
    assert p.length == 2


def test_local_matrix_rejects_other_letters():
    with pytest.raises(ConfigError):
        local_matrix(1.0, 0.0, 2)


def test_norm2x2_matches_svd():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert math.isclose(norm2x2(m), np.linalg.norm(m, 2), rel_tol=1e-12)


@given(lams, energies, st.text("01", min_size=1, max_size=40).map(Word))
def test_short_products_match_numpy(lam, E, w):
    p = word_product(lam, E, w)
    ref = direct(lam, E, w)
    scale = max(1.0, np.abs(ref).max())
    assert np.abs(p.true_matrix() - ref).max() <= 1e-11 * scale * len(w)


@given(lams, energies, words)
def test_backends_agree(lam, E, w):
    ps = [word_product(lam, E, w, backend=b) for b in BACKENDS.values()]
    for p in ps[1:]:
        assert math.isclose(p.log_norm(), ps[0].log_norm(), rel_tol=1e-12, abs_tol=1e-12)


@given(lams, reals, words)
def test_determinant_is_one(lam, E, w):
    p = word_product(lam, E, w)
    assert p.det_error() <= 1e-12 * len(w)
    assert p.log_norm() >= -1e-12


@given(lams, reals, words)
def test_reversal_preserves_norm_for_real_energy(lam, E, w):
    a = word_product(lam, E, w).log_norm()
    b = reversed_product(lam, E, w).log_norm()
    assert abs(a - b) <= 1e-10 * (1 + abs(a))


@given(lams, energies, words, words)
def test_submultiplicative(lam, E, u, v):
    uv = word_product(lam, E, u + v).log_norm()
    assert uv <= word_product(lam, E, u).log_norm() + word_product(lam, E, v).log_norm() + 1e-9


@pytest.mark.parametrize("name", ["fibonacci", "silver", "one-two"])
def test_recursion_matches_direct_products(name):
    cf = ContinuedFraction.preset(name)
    for lam, E in [(1.0, 0.3), (2.5, 1.1 + 0.2j)]:
        table = sn_products(lam, E, cf, 10)
        for n, p in zip(range(-1, 11), table):
            q = word_product(lam, E, build_sn(cf, n))
            assert abs(p.log_norm() - q.log_norm()) <= 1e-10 * (1 + abs(q.log_norm()))
        assert sn_product(lam, E, cf, 10) is not None


def test_batched_traces_match_scalar():
    Es = np.linspace(-3, 3, 17)
    got = sn_log_abs_traces(1.0, Es, FIB, 12)
    for E, g in zip(Es, got):
        assert math.isclose(g, sn_product(1.0, E, FIB, 12).log_abs_trace(), rel_tol=1e-9, abs_tol=1e-9)


def test_depth_errors():
    shallow = ContinuedFraction((1, 1, 1))
    with pytest.raises(DepthError):
        sn_products(1.0, 0.0, shallow, 5)


def test_non_finite_inputs_rejected():
    with pytest.raises(ConfigError):
        word_product(math.nan, 0.0, Word("01"))
    with pytest.raises(ConfigError):
        word_product(1.0, complex(math.inf, 0), Word("01"))


def test_json_round_trip():
    p = word_product(2.0, 0.5 + 0.1j, c_prefix(FIB, 500))
    q = TransferProduct.from_json(json.loads(json.dumps(p.to_json())))
    assert np.array_equal(p.m, q.m) and p.log_scale == q.log_scale and p.length == q.length


def test_long_products_do_not_overflow():
    p = word_product(4.0, 3.0, c_prefix(FIB, 200_000))
    assert math.isfinite(p.log_norm()) and p.log_norm() > 1000


def test_prefix_log_norms_any_order():
    w = c_prefix(FIB, 1000)
    cps = [1000, 3, 77, 500, 3]
    got = prefix_log_norms(1.5, 0.2, w, cps)
    for N, g in zip(cps, got):
        assert math.isclose(g, word_product(1.5, 0.2, w[:N]).log_norm(), rel_tol=1e-12, abs_tol=1e-12)


def test_power_and_composition():
    p = word_product(1.0, 0.7, Word("01"))
    assert abs(p.power(5).log_norm() - word_product(1.0, 0.7, Word("01" * 5)).log_norm()) < 1e-12
    assert (p @ TransferProduct.identity()).length == 2
    with pytest.raises(ValueError):
        p.power(-1)
