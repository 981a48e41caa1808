import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.optimize import brentq, minimize_scalar

from bridged.data import gen_cox_data, gen_flow_network, gen_harmonization_synthetic, gen_lqe_data
from bridged.errors import InvalidInputError
from bridged.inner import InnerSolution, max_flow_solve
from bridged.models import (
    IDENTITY,
    SOFTPLUS,
    BMMCModel,
    BridgedModel,
    CoxModel,
    FactorModel,
    FlowModel,
    HarmonizationModel,
    LQEModel,
    ParamVector,
    PrecomputedProjectionTable,
    envelope_subgradient,
    factor_model_oracle,
    factor_model_zhat,
    feasible_alpha_tilde,
    propriety_dual_bound_check,
    t_regression_oracle,
    t_regression_zhat,
)
from bridged.models.priors import Flat, Gamma, HalfNormal, InvGamma, Normal
from bridged.numerics import make_rng
from bridged.oracle_suite import fd_gradient, propriety_grid

seeds = st.integers(min_value=0, max_value=2**31 - 1)


# -- parameter transforms -------------------------------------------------------------

def test_param_vector_roundtrip():
    pv = ParamVector(("a", "b"), (SOFTPLUS, IDENTITY))
    native = np.array([0.3, -2.0])
    np.testing.assert_allclose(pv.to_native(pv.to_raw(native)), native)
    with pytest.raises(InvalidInputError):
        pv.to_raw([-1.0, 0.0])
    with pytest.raises(InvalidInputError):
        ParamVector(("a",), ("exp",))


def test_param_vector_jacobian_by_differences():
    pv = ParamVector(("a",), (SOFTPLUS,))
    r, h = 0.7, 1e-6
    dn = (pv.to_native([r + h]) - pv.to_native([r - h]))[0] / (2 * h)
    assert math.exp(pv.log_jacobian([r])) == pytest.approx(dn, rel=1e-8)


# -- oracle models ------------------------------------------------------------------------

def t_data(seed, n=50, d=3):
    rng = make_rng(seed)
    X = rng.standard_normal((n, d))
    return X @ rng.standard_normal(d) + rng.standard_t(5.0, n), X


@settings(max_examples=20, deadline=None)
@given(seed=seeds, v=st.floats(0.5, 20.0))
def test_t_oracle_constant(seed, v):
    y, X = t_data(seed)
    rng = make_rng(seed + 1)
    diffs = [np.subtract(*t_regression_oracle(rng.normal(0, 2, 3), y, X, v)) for _ in range(20)]
    assert np.ptp(diffs) <= 1e-8


def test_t_oracle_ols_vs_zero():
    y, X = t_data(1)
    ols = np.linalg.lstsq(X, y, rcond=None)[0]
    a = np.subtract(*t_regression_oracle(ols, y, X, 3.0))
    b = np.subtract(*t_regression_oracle(np.zeros(3), y, X, 3.0))
    assert a == pytest.approx(b, abs=1e-10)


def test_t_zhat_perfect_fit():
    X = np.eye(4)
    y = np.arange(4.0)
    assert t_regression_zhat(y, y, X, 2.0) == pytest.approx(2.0 / (2.0 + 4 + 2))


def test_t_zhat_numeric_minimiser():
    y, X = t_data(2)
    lam = np.array([0.1, -0.3, 0.5])
    n, v = y.size, 4.0
    rss = float(np.sum((y - X @ lam) ** 2))
    nll = lambda z: (n + v + 2) / 2 * math.log(z) + (rss + v) / (2 * z)
    res = minimize_scalar(nll, bounds=(1e-6, 1e4), method="bounded",
                          options={"xatol": 1e-12})
    assert t_regression_zhat(lam, y, X, v) == pytest.approx(res.x, rel=1e-7)


def factor_data(seed, n=20, p=3):
    rng = make_rng(seed)
    C = rng.standard_normal((n, p))
    A = rng.standard_normal((p, p))
    G = A @ A.T + p * np.eye(p)
    y = C @ rng.standard_normal(p) + rng.standard_normal(n)
    return G, C, y


def test_factor_zhat_identity_case():
    y = np.array([1.0, -2.0, 4.0])
    np.testing.assert_allclose(factor_model_zhat(np.eye(3), 1.0, y, np.eye(3)), y / 2)


def test_factor_oracle_constant():
    G, C, y = factor_data(3)
    rng = make_rng(4)
    diffs = []
    for _ in range(10):
        s2 = rng.uniform(0.2, 5.0)
        diffs.append(np.subtract(*factor_model_oracle(G, s2, y, C)))
    assert np.ptp(diffs) <= 1e-8


def test_factor_zero_data():
    G, C, _ = factor_data(5)
    y = np.zeros(C.shape[0])
    np.testing.assert_allclose(factor_model_zhat(G, 1.0, y, C), 0.0)
    assert factor_model_oracle(G, 1.0, y, C) == (0.0, 0.0)


def test_factor_singular_g():
    _, C, y = factor_data(6)
    with pytest.raises(InvalidInputError):
        factor_model_oracle(np.zeros((3, 3)), 1.0, y, C)


def test_factor_model_class():
    G, C, y = factor_data(7)
    m = FactorModel(y, C, G)
    val, sol = m.evaluate([1.5])
    prof, _ = factor_model_oracle(G, 1.5, y, C)
    assert val == pytest.approx(prof + InvGamma(2.0, 1.0).logpdf(1.5))


# -- LQE ------------------------------------------------------------------------------------

def test_lqe_single_point_matches_bisection():
    m = LQEModel(np.array([0.0]), np.array([1.0]))
    tau, b = 0.8, 2.0
    a = brentq(lambda a: tau * a + np.log((a + 1.0) / -a), -1 + 1e-15, -1e-15, xtol=1e-15)
    z = -tau * a
    expected = -0.5 * tau * a * a + z - math.log1p(math.exp(z))
    expected += HalfNormal(1.0).logpdf(tau) + InvGamma(2.0, 5.0).logpdf(b)
    assert m.evaluate([tau, b])[0] == pytest.approx(expected, abs=1e-8)


def test_lqe_tiny_tau_limit():
    n = 20
    m = LQEModel(np.linspace(-3, 3, n), np.ones(n))
    val, sol = m.evaluate([1e-10, 1.0])
    prior = HalfNormal(1.0).logpdf(1e-10) + InvGamma(2.0, 5.0).logpdf(1.0)
    assert val == pytest.approx(n * math.log(0.5) + prior, abs=1e-6)
    np.testing.assert_allclose(sol.z, 0.0, atol=1e-8)


def test_lqe_no_warm_contamination():
    d = gen_lqe_data(40, seed=1)
    m = LQEModel(d.x, d.y)
    v1, s1 = m.evaluate([1.0, 2.0])
    v2, _ = m.evaluate([1.0, 2.5], warm=s1)
    v2_cold, _ = m.evaluate([1.0, 2.5])
    v1_cold, _ = LQEModel(d.x, d.y).evaluate([1.0, 2.0])
    assert (v2 - v1) == pytest.approx(v2_cold - v1_cold, abs=1e-9)


def test_lqe_cdlv_purity():
    d = gen_lqe_data(60, seed=2)
    m = LQEModel(d.x, d.y)
    rng = make_rng(3)
    _, sol = m.evaluate([1.0, 1.0])
    for _ in range(10):
        lam = [rng.uniform(0.3, 3), rng.uniform(0.3, 5)]
        warm, sol = m.evaluate(lam, warm=sol)
        cold, _ = m.evaluate(lam)
        assert abs(warm - cold) <= 10 * m.tol


@pytest.mark.parametrize("seed", range(3))
def test_lqe_envelope_vs_differences(seed):
    d = gen_lqe_data(50, seed=seed)
    m = LQEModel(d.x, d.y)
    rng = make_rng(seed)
    for _ in range(10):
        lam = np.array([rng.uniform(0.3, 3.0), rng.uniform(0.3, 5.0)])
        np.testing.assert_allclose(envelope_subgradient(m, lam), fd_gradient(m, lam), atol=1e-5)


def test_propriety_bound_feasible_alpha():
    d = gen_lqe_data(50, seed=3)
    m = LQEModel(d.x, d.y)
    rep = propriety_dual_bound_check(m, feasible_alpha_tilde(d.y), propriety_grid())
    assert rep.ok and rep.grid.shape == (20, 2)
    assert np.all(np.exp(-rep.dual_at_tilde) >= np.exp(-rep.primal_min))


def test_propriety_bound_tight_at_optimum():
    d = gen_lqe_data(30, seed=4)
    m = LQEModel(d.x, d.y)
    lam = np.array([[1.0, 2.0]])
    _, sol = m.evaluate(lam[0])
    rep = propriety_dual_bound_check(m, sol.dual, lam)
    assert rep.primal_min[0] - rep.dual_at_tilde[0] == pytest.approx(0.0, abs=1e-8)


def test_propriety_rejects_infeasible():
    d = gen_lqe_data(10, seed=5)
    with pytest.raises(InvalidInputError):
        propriety_dual_bound_check(LQEModel(d.x, d.y), np.full(10, 2.0), propriety_grid())


# -- envelope on a hand-solvable toy -------------------------------------------------------

class QuadraticToy(BridgedModel):
    """g(zeta; lam) = (zeta - lam)^2 + lam^2, so z = lam and min g = lam^2."""

    priors = [Flat()]
    params = ParamVector(("lam",), (IDENTITY,))

    def inner_solve(self, lam, warm=None):
        return InnerSolution(z=np.array([lam[0]]), objective=float(lam[0]) ** 2)

    def log_lik(self, lam, sol):
        return -sol.objective

    def grad_log_lik(self, lam, sol):
        z = sol.z[0]
        return np.array([-(-2.0 * (z - lam[0]) + 2.0 * lam[0])])


@pytest.mark.parametrize("lam", [-1.5, 0.0, 2.0])
def test_envelope_quadratic_toy(lam):
    g = envelope_subgradient(QuadraticToy(), np.array([lam]))
    assert g[0] == pytest.approx(-2.0 * lam)


def test_envelope_unsupported():
    class NoGrad(QuadraticToy):
        grad_log_lik = BridgedModel.grad_log_lik

    with pytest.raises(NotImplementedError):
        envelope_subgradient(NoGrad(), np.array([1.0]))


# -- Cox ------------------------------------------------------------------------------------------

def test_cox_single_interval_kernel(rng):
    t = rng.exponential(1.0, 40)
    x = rng.standard_normal(40)
    m = CoxModel(t, x, [0.0, np.inf])
    r = 40 / t.sum()
    expected = 40 * math.log(r) - r * t.sum() + Normal(0, 5).logpdf(0.0)
    assert m.evaluate([0.0])[0] == pytest.approx(expected, rel=1e-12)


def test_cox_symmetry(rng):
    t = rng.exponential(1.0, 30)
    x = rng.standard_normal(30)
    e = [0.0, 0.5, 1.0, np.inf]
    a = CoxModel(t, x, e).evaluate([0.6])[0]
    perm = rng.permutation(30)
    b = CoxModel(t[perm], -x[perm], e).evaluate([-0.6])[0]
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.8])
def test_cox_envelope(lam):
    d = gen_cox_data(200, seed=1)
    m = CoxModel(d.times, d.x, d.boundaries)
    np.testing.assert_allclose(envelope_subgradient(m, [lam]), fd_gradient(m, np.array([lam])),
                               atol=1e-5)


def test_cox_event_in_zero_exposure_interval():
    # a time exactly on a boundary is an event in the next interval, which has no exposure
    m = CoxModel(np.array([0.1, 0.5]), np.zeros(2), [0.0, 0.5, np.inf])
    assert m.evaluate([0.0])[0] == -np.inf


# -- flow ------------------------------------------------------------------------------------------

def flow_setup(seed=0, n_rep=50):
    d = gen_flow_network(12, seed=seed, n_uncertain=3, n_rep=n_rep)
    return d, FlowModel(d.net, d.Y)


def test_flow_perfect_fit():
    d, _ = flow_setup()
    m = FlowModel(d.net, np.tile(d.z_true, (4, 1)))
    sol = m.inner_solve(np.append(d.true_capacity, 1.0))
    assert m.sum_squares(sol.z) == pytest.approx(0.0, abs=1e-18)


def test_flow_sensitivity():
    d, m = flow_setup(1)
    lam = np.append(d.true_capacity, 1.0)
    base = m.inner_solve(lam).z
    saturated = np.abs(base[d.net.uncertain] - d.true_capacity) <= 1e-9
    assert saturated.any()
    j = int(np.flatnonzero(saturated)[0])
    down = lam.copy()
    down[j] *= 0.5
    assert not np.allclose(m.inner_solve(down).z, base)
    # a slack edge: raising its capacity leaves the flows alone
    cap = d.net.capacities(d.true_capacity)
    e = int(np.flatnonzero(base < cap - 1e-6)[0])
    net2 = type(d.net)(d.net.n_nodes, d.net.tail, d.net.head, cap, 0, d.net.n_nodes - 1,
                       uncertain=[e])
    np.testing.assert_array_equal(max_flow_solve(net2, [cap[e] + 5.0]).z, base)


def test_flow_sigma2_dependence():
    d, m = flow_setup(2, n_rep=7)
    lam = np.append(d.true_capacity, 1.0)
    sol = m.inner_solve(lam)
    ss = float(np.sum((d.Y - sol.z) ** 2))
    nE = 7 * d.net.n_edges
    for s2 in (0.5, 2.0):
        assert m.log_lik(np.append(d.true_capacity, s2), sol) == pytest.approx(
            -nE / 2 * math.log(s2) - ss / (2 * s2), rel=1e-12)


# -- BMMC --------------------------------------------------------------------------------------------

def separable_bmmc():
    X = np.array([[-3.0, 0.0], [-2.5, 1.0], [2.5, -1.0], [3.0, 0.0], [0.2, 0.0]])
    labels = np.array([-1.0, -1.0, 1.0, 1.0, 0.0])
    return BMMCModel(X, labels, [4])


def test_bmmc_separable_zero_hinge():
    m = separable_bmmc()
    y = m.full_labels([1.0])
    y[4] = 1.0
    X = m.X[:4]
    sub = BMMCModel(X, y[:4], [], prior=Gamma(3.0, 2.0))
    val, sol = sub.kernel(0.01, y[:4])
    assert sol["hinge"] == pytest.approx(0.0, abs=1e-9)
    assert val == pytest.approx(-0.5 * 0.01 * sol["w"] @ sol["w"] + Gamma(3.0, 2.0).logpdf(0.01))


def test_bmmc_flip_changes_kernel():
    m = separable_bmmc()
    a, _ = m.kernel(1.0, m.full_labels([1.0]))
    b, _ = m.kernel(1.0, m.full_labels([-1.0]))
    assert a != b


def test_gamma_prior_mode():
    p = Gamma(3.0, 2.0)
    grid = np.linspace(0.2, 3.0, 281)
    assert grid[np.argmax([p.logpdf(x) for x in grid])] == pytest.approx(1.0)


def test_bmmc_exact_probs_in_range():
    m = separable_bmmc()
    p = m.exact_probs(n_grid=60)
    assert p.shape == (1,) and 0 < p[0] < 1


# -- harmonization --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_table():
    d = gen_harmonization_synthetic(S=2, R=6, groups=(2, 2), seed=0)
    return PrecomputedProjectionTable.build(d.laplacians, grid=np.array([0.1, 0.5, 1.0]))


def test_table_shapes(small_table):
    t = small_table
    assert t.Z.shape == (2, 3, 6, 6) and t.dist.shape == (2, 3, 2, 3)
    np.testing.assert_allclose(t.dist, t.dist.transpose(2, 3, 0, 1), atol=1e-6)


def test_identical_subjects_zero_distance():
    d = gen_harmonization_synthetic(S=2, R=6, groups=(2, 2), seed=1)
    L = np.array([d.laplacians[0], d.laplacians[0]])
    t = PrecomputedProjectionTable.build(L, grid=np.array([0.2, 0.4]))
    m = HarmonizationModel(t)
    assert m.pair_sum([1, 1]) == pytest.approx(0.0, abs=1e-10)


def test_harmonization_kernel_matches_formula(small_table):
    m = HarmonizationModel(small_table)
    idx, s2, tau = np.array([0, 2]), 0.7, 1.3
    t = small_table
    lam = t.grid[idx]
    val = 0.0
    for s in range(2):
        val += (-0.5 * math.log(s2) - t.misfit[s, idx[s]] / (2 * s2) + math.log(lam[s] / s2)
                - lam[s] * t.nuclear[s, idx[s]] / s2)
        other = 1 - s
        val += -0.5 * math.log(tau) - t.dist[s, idx[s], other, idx[other]] ** 2 / (2 * tau)
    val += InvGamma(2, 1).logpdf(s2) + InvGamma(2, 1).logpdf(tau)
    assert m.log_kernel(idx, s2, tau) == pytest.approx(val, rel=1e-12)


def test_harmonization_large_tau(small_table):
    # the pairwise factor is -(S/2) log tau - pair_sum / ((S-1) tau); S = 2 here
    m = HarmonizationModel(small_table)
    idx = np.array([1, 2])
    prior = InvGamma(2, 1)
    first = m.log_kernel(idx, 1.0, 1.0) - prior.logpdf(1.0) + m.pair_sum(idx)
    big = 1e12
    second = m.log_kernel(idx, 1.0, big) - prior.logpdf(big) - first
    assert second == pytest.approx(-math.log(big), abs=1e-6)


def test_harmonization_bad_index(small_table):
    with pytest.raises(InvalidInputError):
        HarmonizationModel(small_table).log_kernel([0, 5], 1.0, 1.0)


# -- prior Jacobian ------------------------------------------------------------------------------

@pytest.mark.parametrize("prior", [HalfNormal(1.0), InvGamma(2.0, 5.0), Gamma(3.0, 2.0)])
def test_raw_sampling_reproduces_prior(prior):
    # importance-free check: sample raw coordinates from the target by inverse-CDF on a grid
    pv = ParamVector(("x",), (SOFTPLUS,))
    r = np.linspace(-25, 25, 200001)
    logp = np.array([prior.logpdf(float(v)) for v in pv.to_native(r[:, None]).ravel()]) + np.log(
        pv.dnative(r))
    p = np.exp(logp - logp.max())
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    u = make_rng(0).random(10_000)
    draws = pv.to_native(np.interp(u, cdf, r))
    assert stats.kstest(draws, prior.cdf).statistic <= 0.02
