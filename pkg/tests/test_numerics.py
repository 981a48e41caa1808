import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridged.errors import DecompositionError, InvalidInputError
from bridged.numerics import (
    cholesky,
    cholesky_solve,
    geodesic_distance,
    make_rng,
    nuclear_norm,
    pairwise_geodesic,
    pg_mean,
    pg_var,
    polya_gamma_sample,
    softplus,
    softplus_inv,
    spawn_rngs,
    squared_exp_kernel,
    svd_soft_threshold,
)

from conftest import random_psd, random_spd

seeds = st.integers(min_value=0, max_value=2**31 - 1)


# -- squared exponential kernel ---------------------------------------------------

def test_kernel_zero_distance():
    Q = squared_exp_kernel(np.zeros(2), tau=2.0, b=1.0)
    np.testing.assert_array_equal(Q, np.full((2, 2), 2.0))


def test_kernel_known_offdiagonal():
    Q = squared_exp_kernel(np.array([0.0, np.sqrt(2.0)]), tau=1.0, b=1.0)
    assert Q[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-14)
    assert Q[0, 1] == Q[1, 0]


def test_kernel_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        squared_exp_kernel(np.array([0.0, np.nan]), tau=1.0, b=1.0)


def test_kernel_rejects_nonpositive_params():
    with pytest.raises(InvalidInputError):
        squared_exp_kernel(np.zeros(3), tau=0.0, b=1.0)


@settings(max_examples=100, deadline=None)
@given(seed=seeds, n=st.integers(1, 30), tau=st.floats(0.01, 100.0), b=st.floats(0.01, 100.0))
def test_kernel_psd_diag_and_norm(seed, n, tau, b):
    x = make_rng(seed).uniform(-6, 6, n)
    Q = squared_exp_kernel(x, tau=tau, b=b)
    np.testing.assert_array_equal(Q, Q.T)
    np.testing.assert_allclose(np.diag(Q), tau)
    w = np.linalg.eigvalsh(Q)
    assert w.min() >= -1e-8 * tau
    assert w.max() <= n * tau * (1 + 1e-12)


# -- Cholesky ------------------------------------------------------------------------

def test_cholesky_solve_identity():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(cholesky_solve(np.eye(3), v), v)


def test_cholesky_solve_diagonal():
    np.testing.assert_allclose(cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0])


@pytest.mark.parametrize("seed", range(5))
def test_cholesky_solve_residual(seed):
    rng = make_rng(seed)
    A = random_spd(rng, 5)
    rhs = rng.standard_normal(5)
    x = cholesky_solve(A, rhs)
    assert np.linalg.norm(A @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_cholesky_reports_pivot():
    A = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(DecompositionError) as info:
        cholesky(A)
    assert info.value.pivot == 2


def test_cholesky_rejects_nonsquare():
    with pytest.raises(InvalidInputError):
        cholesky(np.ones((2, 3)))


# -- geodesic distance ----------------------------------------------------------------

def test_geodesic_identical_is_zero(rng):
    X = random_psd(rng, 4)
    assert geodesic_distance(X, X) == pytest.approx(0.0, abs=1e-8)


def test_geodesic_diagonal_example():
    d = geodesic_distance(np.eye(2), np.exp(2.0) * np.eye(2), eta=1e-12)
    assert d == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-9)


def test_geodesic_size_mismatch():
    with pytest.raises(InvalidInputError):
        geodesic_distance(np.eye(2), np.eye(3))


def test_geodesic_requires_positive_eta():
    with pytest.raises(InvalidInputError):
        geodesic_distance(np.eye(2), np.eye(2), eta=0.0)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, n=st.integers(2, 8))
def test_geodesic_symmetric_and_nonnegative(seed, n):
    rng = make_rng(seed)
    X, Y = random_spd(rng, n), random_spd(rng, n)
    dxy, dyx = geodesic_distance(X, Y), geodesic_distance(Y, X)
    assert dxy >= 0
    assert dxy == pytest.approx(dyx, rel=1e-8, abs=1e-8)


def test_geodesic_symmetric_rank_deficient(rng):
    # eigenvalues near eta are only known to eps * ||X||, so allow more slack
    X, Y = random_psd(rng, 6, rank=5), random_psd(rng, 6)
    assert geodesic_distance(X, Y) == pytest.approx(geodesic_distance(Y, X), rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_geodesic_triangle_inequality(seed):
    rng = make_rng(seed)
    X, Y, Z = (random_spd(rng, 4) for _ in range(3))
    assert geodesic_distance(X, Z) <= geodesic_distance(X, Y) + geodesic_distance(Y, Z) + 1e-9


def test_pairwise_matches_single(rng):
    mats = np.array([random_psd(rng, 5) for _ in range(4)])
    D = pairwise_geodesic(mats)
    for i in range(4):
        for j in range(4):
            assert D[i, j] == pytest.approx(geodesic_distance(mats[i], mats[j]), rel=1e-9, abs=1e-12)


# -- singular-value thresholding -----------------------------------------------------

def test_svt_zero_threshold(rng):
    X = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(svd_soft_threshold(X, 0.0), X)


def test_svt_full_shrinkage(rng):
    X = rng.standard_normal((4, 3))
    smax = np.linalg.norm(X, 2)
    np.testing.assert_allclose(svd_soft_threshold(X, smax), 0.0, atol=1e-12)


def test_svt_rank_one(rng):
    u = rng.standard_normal(4)
    v = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    np.testing.assert_allclose(svd_soft_threshold(3.0 * np.outer(u, v), 1.0), 2.0 * np.outer(u, v),
                               atol=1e-12)


def test_svt_singular_values(rng):
    X = rng.standard_normal((5, 5))
    s = np.linalg.svd(X, compute_uv=False)
    out = np.linalg.svd(svd_soft_threshold(X, 0.7), compute_uv=False)
    np.testing.assert_allclose(out, np.maximum(s - 0.7, 0.0), atol=1e-10)
    assert nuclear_norm(svd_soft_threshold(X, 0.7)) == pytest.approx(np.maximum(s - 0.7, 0).sum())


def test_svt_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        svd_soft_threshold(np.eye(2), -1.0)
    with pytest.raises(InvalidInputError):
        svd_soft_threshold(np.array([[np.inf]]), 1.0)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, t=st.floats(0.0, 5.0))
def test_svt_nonexpansive(seed, t):
    rng = make_rng(seed)
    X, Y = rng.standard_normal((2, 4, 4))
    lhs = np.linalg.norm(svd_soft_threshold(X, t) - svd_soft_threshold(Y, t))
    assert lhs <= np.linalg.norm(X - Y) + 1e-10


# -- transforms and generators ---------------------------------------------------------

@given(st.floats(-50.0, 50.0))
def test_softplus_roundtrip(x):
    assert float(softplus_inv(softplus(x))) == pytest.approx(x, rel=1e-8, abs=1e-8)


def test_softplus_inv_large():
    assert float(softplus_inv(1000.0)) == pytest.approx(1000.0)


def test_rng_reproducible():
    a = make_rng(7).standard_normal(5)
    b = make_rng(7).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    c1, c2 = spawn_rngs(7, 2)
    assert not np.array_equal(c1.standard_normal(5), c2.standard_normal(5))


# -- Polya-Gamma ---------------------------------------------------------------------------

def test_pg_analytic_moments_at_zero():
    assert float(pg_mean(0.0)) == 0.25
    assert float(pg_var(0.0)) == pytest.approx(1.0 / 24.0)
    assert float(pg_mean(2.0)) == pytest.approx(np.tanh(1.0) / 4.0)


def test_pg_var_continuous_at_switch():
    assert float(pg_var(1e-3 * 0.999)) == pytest.approx(float(pg_var(1e-3 * 1.001)), rel=1e-6)


@pytest.mark.parametrize("c", [0.0, 0.5, 2.0, 5.0])
def test_pg_moments(c):
    n = 100_000
    draws = polya_gamma_sample(np.full(n, c), make_rng(int(10 * c)))
    assert np.all(draws > 0)
    m, v = float(pg_mean(c)), float(pg_var(c))
    assert abs(draws.mean() - m) <= 3 * np.sqrt(v / n)
    # second moment: Var of x^2 estimated from the sample
    m2 = v + m * m
    se2 = np.std(draws ** 2) / np.sqrt(n)
    assert abs(np.mean(draws ** 2) - m2) <= 3 * se2


def test_pg_scalar_returns_float():
    assert isinstance(polya_gamma_sample(1.0, make_rng(0)), float)
