import numpy as np
import pytest
from scipy import stats

from bridged.diagnostics import (
    ESS_MIN_LENGTH,
    SummaryReport,
    acf,
    auc_roc,
    bvm_check,
    clustering_accuracy,
    ess,
    ks_normal,
    ks_two_sample,
    spectral_cluster,
)
from bridged.errors import InvalidInputError
from bridged.numerics import make_rng
from bridged.samplers import Trace


def make_trace(X, accept_rate=0.4, seconds=2.0):
    n = X.shape[0]
    accept = np.arange(n) % 5 < 5 * accept_rate
    return Trace(names=["a", "b"], samples=X, accept=accept, inner_iterations=np.zeros(n),
                 block_times=np.array([seconds]), step=np.ones(n), window=0)


def ar1(phi, n, seed):
    rng = make_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi ** 2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def test_acf_matches_direct_sum():
    x = make_rng(0).standard_normal(257)
    c = x - x.mean()
    direct = np.array([np.dot(c[: c.size - k], c[k:]) for k in range(11)]) / np.dot(c, c)
    np.testing.assert_allclose(acf(x, 10), direct, atol=1e-12)


def test_acf_ar1_decay():
    r = acf(ar1(0.7, 50_000, 1), 3)
    np.testing.assert_allclose(r, 0.7 ** np.arange(4), atol=0.03)


@pytest.mark.parametrize("phi", [0.0, 0.5, 0.9])
def test_ess_ar1_theory(phi):
    n = 40_000
    expected = n * (1 - phi) / (1 + phi)
    assert ess(ar1(phi, n, 2)) == pytest.approx(expected, rel=0.15)


def test_ess_errors():
    with pytest.raises(InvalidInputError):
        ess(np.arange(ESS_MIN_LENGTH - 1, dtype=float))
    with pytest.raises(InvalidInputError):
        ess(np.ones(500))
    with pytest.raises(InvalidInputError):
        acf(np.arange(10.0), maxlag=10)


def test_ks_helpers():
    rng = make_rng(3)
    a, b = rng.standard_normal(500), rng.standard_normal(700) + 0.3
    assert ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic)
    assert ks_normal(5.0 + 2.0 * rng.standard_normal(20_000)) < 0.015
    assert ks_normal(rng.exponential(size=20_000)) > 0.05
    with pytest.raises(InvalidInputError):
        ks_normal(np.zeros(5))


def test_auc_examples_and_ties():
    assert auc_roc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc_roc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auc_roc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5
    # one tie between a positive and a negative counts half
    assert auc_roc([0.1, 0.5, 0.5, 0.9], [0, 0, 1, 1]) == pytest.approx(7 / 8)


def test_auc_matches_pair_count():
    rng = make_rng(4)
    s = np.round(rng.random(60), 1)
    y = (rng.random(60) < 0.4).astype(int)
    pos, neg = s[y == 1], s[y == 0]
    pairs = (pos[:, None] > neg[None, :]).mean() + 0.5 * (pos[:, None] == neg[None, :]).mean()
    assert auc_roc(s, y) == pytest.approx(pairs, abs=1e-12)
    with pytest.raises(InvalidInputError):
        auc_roc([0.1, 0.2], [1, 1])
    with pytest.raises(InvalidInputError):
        auc_roc([0.1, 0.2], [0, 2])


def test_spectral_cluster_separated_blobs():
    rng = make_rng(5)
    pts = np.vstack([rng.normal(0, 0.3, (10, 2)), rng.normal(5, 0.3, (10, 2))])
    D = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    lab = spectral_cluster(D, 2, seed=0)
    truth = np.repeat([0, 1], 10)
    assert clustering_accuracy(lab, truth) == 1.0
    assert lab[0] == 0
    np.testing.assert_array_equal(lab, spectral_cluster(D, 2, seed=0))
    with pytest.raises(InvalidInputError):
        spectral_cluster(D[:3, :4])
    with pytest.raises(InvalidInputError):
        spectral_cluster(D, k=0)


def test_clustering_accuracy_permutations():
    assert clustering_accuracy([1, 1, 0, 0], [0, 0, 1, 1]) == 1.0
    assert clustering_accuracy([0, 1, 0, 1], [0, 0, 1, 1]) == 0.5
    assert clustering_accuracy([2, 0, 1], [0, 1, 2]) == 1.0


def test_bvm_check_slope():
    rng = make_rng(6)
    ns = np.array([50, 200, 800])
    traces = [rng.normal(1.0, 1 / np.sqrt(n), (4000, 2)) for n in ns]
    rep = bvm_check(traces, ns, names=["a", "b"])
    np.testing.assert_allclose(rep.slopes, -1.0, atol=0.1)
    assert rep.ks.max() < 0.05
    assert rep.variances.shape == (3, 2)
    with pytest.raises(InvalidInputError):
        bvm_check(traces[:2], ns)


def test_summary_report_sections():
    X = np.column_stack([ar1(0.3, 2000, 7), ar1(0.0, 2000, 8)])
    tr = make_trace(X)
    rep = SummaryReport.from_trace(tr, with_ks=True)
    sec = rep.sections(timing=True)
    assert list(sec) == ["chain", "param:a", "param:b"]
    assert float(sec["param:a"]["mean"]) == pytest.approx(X[:, 0].mean())
    assert float(sec["param:b"]["ess_per_10s"]) == pytest.approx(rep.ess[1] * 5.0)
    assert "ks_normal" in sec["param:a"]
    short = SummaryReport.from_trace(make_trace(X[:50]))
    assert np.all(np.isnan(short.ess))
