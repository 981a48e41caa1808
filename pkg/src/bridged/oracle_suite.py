"""Closed-form and duality checks run by ``bridged oracle-suite``.

Every check returns a :class:`Check` with the observed value and the
tolerance it is held to. The oracle functions under test are parameters so
that a deliberately broken implementation can be substituted.
"""
import time
from dataclasses import dataclass

import numpy as np

from bridged.data import gen_cox_data, gen_flow_network, gen_lqe_data
from bridged.inner import (
    cox_loglik,
    cox_profile_hazard,
    dual_ascent_lqe,
    laplacian_projection_admm,
    max_flow_solve,
    min_cut_capacity,
    svm_dual_solve,
    svm_dual_value,
    svm_primal_value,
)
from bridged.inner.admm import is_laplacian
from bridged.models import (
    CoxModel,
    LQEModel,
    envelope_subgradient,
    factor_model_oracle,
    feasible_alpha_tilde,
    propriety_dual_bound_check,
    t_regression_oracle,
)
from bridged.numerics import make_rng, squared_exp_kernel


@dataclass
class Check:
    name: str
    observed: float
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: observed={self.observed:.3e} "
                f"tolerance={self.tolerance:.1e} ({self.seconds:.2f}s)")


def _check(name, observed, tol, t0):
    return Check(name, float(observed), tol, bool(observed <= tol), time.perf_counter() - t0)


def check_t_constancy(oracle=t_regression_oracle, n=50, d=3, v=4.0, draws=20, seed=0, tol=1e-8):
    """Profile minus closed-form t log kernel is constant in lambda."""
    t0 = time.perf_counter()
    rng = make_rng(seed)
    X = rng.standard_normal((n, d))
    y = X @ rng.standard_normal(d) + rng.standard_t(5.0, n)
    diffs = []
    for _ in range(draws):
        lam = rng.normal(0.0, 2.0, d)
        prof, closed = oracle(lam, y, X, v)
        diffs.append(prof - closed)
    return _check("t-regression profile vs closed form (spread)", np.ptp(diffs), tol, t0)


def check_factor_constancy(oracle=factor_model_oracle, n=50, p=3, draws=20, seed=1, tol=1e-8):
    """Profile minus closed-form Gaussian log kernel is constant in sigma2."""
    t0 = time.perf_counter()
    rng = make_rng(seed)
    C = rng.standard_normal((n, p))
    A = rng.standard_normal((p, p))
    G = A @ A.T + p * np.eye(p)
    y = C @ rng.standard_normal(p) + rng.standard_normal(n)
    diffs = []
    for _ in range(draws):
        s2 = float(rng.uniform(0.2, 5.0))
        prof, closed = oracle(G, s2, y, C)
        diffs.append(prof - closed)
    return _check("factor model profile vs closed form (spread)", np.ptp(diffs), tol, t0)


def check_lqe_gap(sizes=(10, 100, 500), seed=2, tol=1e-8):
    """Primal minus dual at the solution of the LQE problem."""
    t0 = time.perf_counter()
    worst = 0.0
    for k, n in enumerate(sizes):
        d = gen_lqe_data(n, seed + k)
        Q = squared_exp_kernel(d.x, tau=1.0, b=1.0)
        sol = dual_ascent_lqe(d.y, Q)
        worst = max(worst, abs(sol.extras["gap"]))
    return _check("LQE primal-dual gap", worst, tol, t0)


def propriety_grid(points=20):
    """(tau, b) pairs on a 4 x 5 grid."""
    taus = np.geomspace(0.1, 10.0, 4)
    bs = np.geomspace(0.1, 10.0, points // 4)
    return np.array([(t, b) for t in taus for b in bs])


def check_propriety_bound(n=50, seed=3):
    """exp(-g_dual(alpha_tilde)) bounds the LQE kernel on a 20-point grid."""
    t0 = time.perf_counter()
    d = gen_lqe_data(n, seed)
    report = propriety_dual_bound_check(LQEModel(d.x, d.y), feasible_alpha_tilde(d.y),
                                        propriety_grid())
    return _check("LQE dual bound violations on 20-point grid",
                  report.violations + report.envelope_violations, 0, t0)


def fd_gradient(model, lam, rel=1e-5):
    """Central differences of the log kernel in native coordinates."""
    lam = np.asarray(lam, dtype=float)
    g = np.empty_like(lam)
    for j in range(lam.size):
        h = rel * max(1.0, abs(lam[j]))
        up, dn = lam.copy(), lam.copy()
        up[j] += h
        dn[j] -= h
        g[j] = (model.evaluate(up)[0] - model.evaluate(dn)[0]) / (2 * h)
    return g


def check_envelope_lqe(points=10, n=60, seed=4, tol=1e-4):
    t0 = time.perf_counter()
    d = gen_lqe_data(n, seed)
    model = LQEModel(d.x, d.y)
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(points):
        lam = np.array([rng.uniform(0.3, 3.0), rng.uniform(0.3, 5.0)])
        worst = max(worst, float(np.max(np.abs(
            envelope_subgradient(model, lam) - fd_gradient(model, lam)))))
    return _check("LQE envelope gradient vs central differences", worst, tol, t0)


def check_envelope_cox(points=10, n=200, seed=5, tol=1e-4):
    t0 = time.perf_counter()
    d = gen_cox_data(n, seed)
    model = CoxModel(d.times, d.x, d.boundaries)
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(points):
        lam = np.array([rng.uniform(-1.0, 2.0)])
        worst = max(worst, float(np.max(np.abs(
            envelope_subgradient(model, lam) - fd_gradient(model, lam)))))
    return _check("Cox envelope gradient vs central differences", worst, tol, t0)


def check_cox_profile(n=200, seed=6, tol=1e-9):
    """Profiled rates beat random positive perturbations of themselves."""
    t0 = time.perf_counter()
    d = gen_cox_data(n, seed)
    sol = cox_profile_hazard(d.times, d.x, 0.5, d.boundaries)
    best = sol.extras["loglik"]
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(20):
        r = sol.z * np.exp(0.1 * rng.standard_normal(sol.z.size))
        worst = max(worst, cox_loglik(r, d.times, d.x, 0.5, d.boundaries) - best)
    return _check("Cox profiled rates are optimal (max improvement)", max(worst, 0.0), tol, t0)


def check_svm_gap(n=80, seed=7, tol=1e-6):
    t0 = time.perf_counter()
    rng = make_rng(seed)
    X = rng.standard_normal((n, 2))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(n) > 0, 1.0, -1.0)
    worst = 0.0
    for lam in (0.01, 0.1, 1.0):
        sol = svm_dual_solve(X, y, lam)
        primal = svm_primal_value(sol["w"], sol["b"], X, y, lam)
        dual = svm_dual_value(sol.dual, X, y, lam)
        worst = max(worst, (primal - dual) / max(1.0, abs(primal)))
    return _check("SVM relative primal-dual gap", worst, tol, t0)


def check_flow_duality(seed=8, tol=1e-9):
    t0 = time.perf_counter()
    d = gen_flow_network(15, seed=seed, n_uncertain=3, n_rep=1)
    sol = max_flow_solve(d.net)
    gap = abs(min_cut_capacity(d.net, flows=sol.z) - sol.objective)
    return _check("max flow equals min cut", max(gap, sol.residual), tol, t0)


def check_admm_laplacian(R=8, seed=9):
    t0 = time.perf_counter()
    rng = make_rng(seed)
    W = rng.uniform(0.0, 1.0, (R, R))
    W = np.triu(W, 1) + np.triu(W, 1).T
    L = np.diag(W.sum(axis=1)) - W
    sol = laplacian_projection_admm(L, 1.0)
    return _check("ADMM output is a Laplacian", 0 if is_laplacian(sol.z, atol=1e-6) else 1, 0, t0)


ALL_CHECKS = (
    check_t_constancy,
    check_factor_constancy,
    check_lqe_gap,
    check_propriety_bound,
    check_envelope_lqe,
    check_envelope_cox,
    check_cox_profile,
    check_svm_gap,
    check_flow_duality,
    check_admm_laplacian,
)


def run_suite(checks=ALL_CHECKS):
    """Run every check; returns the list of :class:`Check` results."""
    return [c() for c in checks]
