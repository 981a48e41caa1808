import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from bridged.data import gen_harmonization_synthetic, gen_lqe_data
from bridged.diagnostics import ess
from bridged.errors import InvalidInputError
from bridged.models import (
    BMMCModel,
    HarmonizationModel,
    LQEModel,
    PrecomputedProjectionTable,
    PriorOnlyModel,
)
from bridged.models.base import IDENTITY
from bridged.models.priors import Normal, Prior
from bridged.numerics import cholesky, make_rng, polya_gamma_sample
from bridged.samplers import (
    AdaptationConfig,
    discrete_gibbs,
    gibbs_latent_normal,
    mala,
    rw_metropolis,
)
from bridged.samplers.baselines import draw_latent


def mc_se(x):
    return float(np.std(x) / math.sqrt(ess(x)))


# -- random-walk Metropolis -----------------------------------------------------------------

def test_rw_standard_normal():
    m = PriorOnlyModel([Normal(0.0, 1.0)])
    tr = rw_metropolis(m, [0.0], 12_000, 2_000, seed=3)
    x = tr.samples[:, 0]
    assert x.shape == (10_000,)
    assert abs(x.mean()) <= 3 * mc_se(x)
    # variance: SE from the chain of squared deviations
    assert abs(np.mean(x ** 2) - 1.0) <= 3 * mc_se(x ** 2)


def test_rw_reproducible():
    m = PriorOnlyModel([Normal(0.0, 1.0), Normal(2.0, 0.5)])
    a = rw_metropolis(m, [0.0, 2.0], 500, 100, seed=1)
    b = rw_metropolis(m, [0.0, 2.0], 500, 100, seed=1)
    c = rw_metropolis(m, [0.0, 2.0], 500, 100, seed=2)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_trace_shape_and_acceptance():
    m = PriorOnlyModel([Normal(0.0, 1.0)])
    tr = rw_metropolis(m, [0.0], 700, 300, seed=0)
    assert tr.samples.shape == (400, 1)
    assert tr.accept.shape == (700,)
    assert 0.0 <= tr.acceptance <= 1.0
    assert tr.column("p0").shape == (400,)


def test_step_frozen_after_window():
    m = PriorOnlyModel([Normal(0.0, 1.0), Normal(0.0, 3.0)])
    adapt = AdaptationConfig(window=200)
    short = rw_metropolis(m, [0.0, 0.0], 400, 300, adapt=adapt, seed=5)
    long = rw_metropolis(m, [0.0, 0.0], 2000, 300, adapt=adapt, seed=5)
    assert short.window == long.window == 200
    assert np.array_equal(short.step, long.step)
    np.testing.assert_array_equal(short.samples, long.samples[:100])


def test_rw_rejects_bad_arguments():
    m = PriorOnlyModel([Normal(0.0, 1.0)])
    with pytest.raises(InvalidInputError):
        rw_metropolis(m, [0.0], 100, 100)
    with pytest.raises(InvalidInputError):
        rw_metropolis(m, [0.0], 100, 10, adapt=AdaptationConfig(step=[-1.0]))


class ThreeState(Prior):
    """Piecewise-constant density on [0, 3) with masses ``probs``."""

    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def logpdf(self, x):
        if not 0.0 <= x < 3.0:
            return -np.inf
        return math.log(self.probs[int(x)])

    def grad(self, x):
        return 0.0


def test_detailed_balance_three_states():
    probs = np.array([0.2, 0.5, 0.3])
    m = PriorOnlyModel([ThreeState(probs)], transforms=[IDENTITY])
    tr = rw_metropolis(m, [1.5], 60_001, 1, adapt=AdaptationConfig(window=0, step=[1.5]), seed=9)
    s = np.floor(tr.samples[:, 0]).astype(int)
    N = np.zeros((3, 3))
    np.add.at(N, (s[:-1], s[1:]), 1.0)
    freq = np.bincount(s, minlength=3) / s.size
    # stationary frequencies, with a generous allowance for autocorrelation
    np.testing.assert_allclose(freq, probs, atol=0.02)
    flow = N / N.sum()
    for i in range(3):
        for j in range(i + 1, 3):
            se = math.sqrt(N[i, j] + N[j, i]) / N.sum()
            assert abs(flow[i, j] - flow[j, i]) <= 4 * se + 1e-12


def test_failures_counted_as_rejections():
    class Flaky(PriorOnlyModel):
        def inner_solve(self, lam, warm=None):
            if lam[0] > 1.0:
                raise InvalidInputError("solver refused")
            return super().inner_solve(lam, warm)

    tr = rw_metropolis(Flaky([Normal(0.0, 1.0)]), [0.0], 2000, 500, seed=0)
    assert tr.failures > 0
    assert np.all(tr.samples <= 1.0)


def test_warm_start_safety():
    d = gen_lqe_data(80, seed=1)
    m = LQEModel(d.x, d.y)
    warm_log, cold_log = [], []
    rw_metropolis(m, [1.0, 1.0], 500, 100, seed=2, warm_start=True, kernel_log=warm_log)
    rw_metropolis(m, [1.0, 1.0], 500, 100, seed=2, warm_start=False, kernel_log=cold_log)
    assert np.max(np.abs(np.array(warm_log) - np.array(cold_log))) <= 10 * m.tol


# -- MALA -----------------------------------------------------------------------------------------

def test_mala_gaussian_preconditioned():
    priors = [Normal(0.0, 2.0), Normal(1.0, 0.5)]
    m = PriorOnlyModel(priors, transforms=[IDENTITY, IDENTITY])
    M = np.diag([4.0, 0.25])
    tr = mala(m, [0.0, 1.0], 6000, 1000, tau=0.5, M=M, seed=4)
    assert tr.acceptance > 0.5
    for j, mean in enumerate((0.0, 1.0)):
        x = tr.samples[:, j]
        assert abs(x.mean() - mean) <= 3 * mc_se(x)


def test_mala_small_step_accepts_everything():
    m = PriorOnlyModel([Normal(0.0, 1.0)], transforms=[IDENTITY])
    tr = mala(m, [0.3], 600, 100, tau=1e-6, seed=0)
    assert tr.acceptance > 0.99


def test_mala_matches_rw_on_lqe():
    d = gen_lqe_data(40, seed=3)
    m = LQEModel(d.x, d.y)
    a = rw_metropolis(m, [1.0, 1.0], 6000, 1000, seed=1)
    b = mala(m, [1.0, 1.0], 6000, 1000, tau=0.3, M=np.diag(np.var(
        m.params.to_raw(a.samples), axis=0)), seed=2)
    for j in range(2):
        x, y = a.samples[:, j], b.samples[:, j]
        se = math.sqrt(mc_se(x) ** 2 + mc_se(y) ** 2)
        assert abs(x.mean() - y.mean()) <= 3 * se


# -- Polya-Gamma Gibbs baseline ------------------------------------------------------------------

def test_draw_latent_conditional_mean():
    rng = make_rng(0)
    n = 4
    A = rng.standard_normal((n, n))
    Q = A @ A.T + np.eye(n)
    L = cholesky(Q)
    eta = rng.uniform(0.1, 1.0, n)
    kappa = np.array([0.5, -0.5, 0.5, 0.5])
    S = np.linalg.inv(np.linalg.inv(Q) + np.diag(eta))
    draws = np.array([draw_latent(Q, L, eta, kappa, rng) for _ in range(20_000)])
    se = np.sqrt(np.diag(S) / 20_000)
    assert np.all(np.abs(draws.mean(axis=0) - S @ kappa) <= 4 * se)
    np.testing.assert_allclose(np.cov(draws.T), S, atol=0.05 * np.abs(S).max())


def test_pg_gibbs_decoupled_points_match_quadrature():
    # two far-apart points: Q is diagonal, so each latent has a 1-d posterior
    tau = 2.0
    Q = tau * np.eye(2)
    L = cholesky(Q)
    y = np.array([1.0, 0.0])
    kappa = y - 0.5
    rng = make_rng(1)
    zeta = np.zeros(2)
    out = np.empty((20_000, 2))
    for t in range(out.shape[0]):
        zeta = draw_latent(Q, L, polya_gamma_sample(zeta, rng), kappa, rng)
        out[t] = zeta
    grid = np.linspace(-12, 12, 40001)
    for i in range(2):
        logp = -grid ** 2 / (2 * tau) + y[i] * grid - np.logaddexp(0.0, grid)
        p = np.exp(logp - logp.max())
        cdf = cumulative_trapezoid(p, grid, initial=0.0)
        cdf /= cdf[-1]
        ks = stats.kstest(out[1000:, i], lambda v: np.interp(v, grid, cdf)).statistic
        assert ks <= 0.05


def test_pg_gibbs_small_tau_concentrates():
    x = np.linspace(-5, 5, 20)
    tr = gibbs_latent_normal(x, np.ones(20), 300, 100, seed=0,
                             tau_prior=Normal(0.0, 1e-4), init=(1e-4, 1.0))
    assert np.max(np.abs(tr.extras["zeta"])) < 0.1
    assert tr.samples.shape == (200, 2)


# -- discrete Gibbs --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def two_subject_model():
    d = gen_harmonization_synthetic(S=2, R=6, groups=(2, 3), seed=4)
    table = PrecomputedProjectionTable.build(d.laplacians)
    return HarmonizationModel(table)


def test_discrete_gibbs_matches_enumeration(two_subject_model):
    m = two_subject_model
    combos, w = m.enumerate_grid()
    tr = discrete_gibbs(m, 40_000, 1000, seed=3)
    G = m.table.n_grid
    idx = np.rint(tr.samples[:, 2:] / m.table.grid[0]).astype(int) - 1
    freq = np.bincount(idx[:, 0] * G + idx[:, 1], minlength=G * G) / idx.shape[0]
    expected = np.zeros(G * G)
    expected[combos[:, 0] * G + combos[:, 1]] = w
    se = np.sqrt(expected * (1 - expected) / idx.shape[0])
    # autocorrelation allowance of a factor of 3 in the standard error
    assert np.all(np.abs(freq - expected) <= 3 * 4 * se + 1e-3)


def test_discrete_gibbs_single_value_never_moves():
    d = gen_harmonization_synthetic(S=3, R=6, groups=(2, 2), seed=0)
    table = PrecomputedProjectionTable.build(d.laplacians, grid=np.array([0.5]))
    tr = discrete_gibbs(HarmonizationModel(table), 200, 0, seed=0)
    assert np.all(tr.samples[:, 2:] == 0.5)


def test_bmmc_flip_probability_two_solves():
    X = np.array([[-2.0, 0.0], [-1.5, 0.5], [1.5, -0.5], [2.0, 0.0], [0.1, 3.0]])
    labels = np.array([-1.0, -1.0, 1.0, 1.0, 0.0])
    m = BMMCModel(X, labels, [4])
    rng = make_rng(0)
    state = m.init_state(rng, lam0=1.0, imputed=np.array([1.0]))
    k_pos, _ = m.kernel(1.0, m.full_labels([1.0]))
    k_neg, _ = m.kernel(1.0, m.full_labels([-1.0]))
    p_neg = 1.0 / (1.0 + math.exp(k_pos - k_neg))
    flips = 0
    trials = 4000
    for _ in range(trials):
        s = m.init_state(rng, lam0=1.0, imputed=np.array([1.0]))
        m.discrete_conditional(s, 0, rng)
        flips += s.labels[4] == -1.0
    assert abs(flips / trials - p_neg) <= 4 * math.sqrt(p_neg * (1 - p_neg) / trials)
    assert state.labels[4] == 1.0
