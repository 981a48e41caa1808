"""Chain and experiment diagnostics."""
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

import numpy as np
from scipy import stats
from scipy.cluster.vq import kmeans2
from scipy.linalg import eigh

from bridged.errors import InvalidInputError
from bridged.numerics import make_rng

ESS_MIN_LENGTH = 100
KMEANS_RESTARTS = 20


def _centered(series):
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("series must be one-dimensional")
    x = x - x.mean()
    if not np.any(x):
        raise InvalidInputError("series has zero variance")
    return x


def acf(series, maxlag=None):
    """Autocorrelation at lags 0..maxlag with the biased 1/N normalisation."""
    x = _centered(series)
    n = x.size
    maxlag = n - 1 if maxlag is None else int(maxlag)
    if not 0 <= maxlag < n:
        raise InvalidInputError("maxlag must be in [0, len(series))")
    m = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conj(f), m)[: maxlag + 1]
    return acov / acov[0]


def ess(series):
    """Effective sample size by Geyer's initial positive sequence.

    Autocorrelations are summed in adjacent pairs (rho_{2k} + rho_{2k+1})
    until the first negative pair.
    """
    x = np.asarray(series, dtype=float)
    if x.size < ESS_MIN_LENGTH:
        raise InvalidInputError(f"ess needs at least {ESS_MIN_LENGTH} draws")
    n = x.size
    rho = acf(x)
    total = 0.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        total += pair
    # tau = -1 + 2 sum_k (rho_2k + rho_2k+1); antithetic chains capped at N log10 N
    tau = max(2.0 * total - 1.0, 1.0 / np.log10(n))
    return n / tau


def ks_two_sample(a, b):
    """Largest absolute difference between the two empirical CDFs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("both samples must be nonempty")
    return float(stats.ks_2samp(a, b).statistic)


def ks_normal(samples):
    """KS distance of mean/SD-standardised samples to N(0, 1)."""
    x = np.asarray(samples, dtype=float)
    sd = x.std()
    if sd == 0:
        raise InvalidInputError("samples have zero variance")
    return float(stats.kstest((x - x.mean()) / sd, "norm").statistic)


def auc_roc(scores, labels):
    """Area under the ROC curve via the Mann-Whitney statistic, ties at midrank."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise InvalidInputError("scores and labels differ in shape")
    pos = y == 1
    neg = y == 0
    if not np.all(pos | neg):
        raise InvalidInputError("labels must be 0/1")
    n1, n0 = int(pos.sum()), int(neg.sum())
    if n1 == 0 or n0 == 0:
        raise InvalidInputError("both classes must be present")
    ranks = stats.rankdata(s)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def spectral_cluster(dist, k=2, seed=0):
    """Normalised spectral clustering of a distance matrix.

    Affinity exp(-d^2 / (2 m^2)) with m the median off-diagonal distance,
    the k eigenvectors of the smallest eigenvalues of the normalised
    Laplacian, rows scaled to unit length, then k-means with 20 seeded
    restarts keeping the lowest within-cluster sum of squares.
    """
    D = np.asarray(dist, dtype=float)
    n = D.shape[0]
    if D.shape != (n, n) or not np.allclose(D, D.T) or np.any(D < 0):
        raise InvalidInputError("distance matrix must be square, symmetric and nonnegative")
    if not 1 <= k <= n:
        raise InvalidInputError("k must be between 1 and the number of points")
    off = D[~np.eye(n, dtype=bool)]
    med = float(np.median(off)) if off.size else 1.0
    med = med if med > 0 else 1.0
    A = np.exp(-D ** 2 / (2.0 * med ** 2))
    np.fill_diagonal(A, 0.0)
    deg = A.sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    Lsym = np.eye(n) - inv[:, None] * A * inv[None, :]
    _, vecs = eigh(Lsym, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    U = vecs / np.where(norms > 0, norms, 1.0)
    rng = make_rng(seed)
    best, best_cost = None, np.inf
    for _ in range(KMEANS_RESTARTS):
        centers, lab = kmeans2(U, k, minit="++", seed=rng)
        cost = float(np.sum((U - centers[lab]) ** 2))
        if cost < best_cost - 1e-12:
            best, best_cost = lab, cost
    return _canonical_labels(best)


def _canonical_labels(lab):
    """Relabel so clusters are numbered in order of first appearance."""
    mapping = {}
    for v in lab:
        mapping.setdefault(int(v), len(mapping))
    return np.array([mapping[int(v)] for v in lab], dtype=np.int64)


def clustering_accuracy(pred, truth):
    """Best agreement over label permutations (two or more clusters)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    classes = np.unique(np.concatenate([pred, truth]))
    best = 0.0
    for perm in permutations(classes):
        mapped = np.array([perm[np.searchsorted(classes, v)] for v in pred])
        best = max(best, float(np.mean(mapped == truth)))
    return best


@dataclass
class BvMReport:
    """Per-n variances and standardised-marginal KS distances."""

    n_values: np.ndarray
    names: list
    variances: np.ndarray            # (len(n_values), d)
    ks: np.ndarray                   # (len(n_values), d)
    slopes: np.ndarray               # (d,) slope of log variance on log n


def bvm_check(traces, n_values, names=None):
    """Empirical Bernstein-von Mises summary across sample sizes.

    Parameters
    ----------
    traces : sequence of (draws, d) arrays or Trace objects, one per n
    n_values : sample sizes matching ``traces``
    """
    n_values = np.asarray(n_values, dtype=float)
    mats = [np.asarray(getattr(t, "samples", t), dtype=float) for t in traces]
    if len(mats) != n_values.size:
        raise InvalidInputError("one trace per sample size is required")
    mats = [m[:, None] if m.ndim == 1 else m for m in mats]
    d = mats[0].shape[1]
    if names is None:
        names = list(getattr(traces[0], "names", [f"p{i}" for i in range(d)]))
    var = np.array([m.var(axis=0) for m in mats])
    ks = np.array([[ks_normal(m[:, j]) for j in range(d)] for m in mats])
    slopes = np.array([
        np.polyfit(np.log(n_values), np.log(var[:, j]), 1)[0] if n_values.size > 1 else np.nan
        for j in range(d)
    ])
    return BvMReport(n_values, list(names), var, ks, slopes)


@dataclass
class SummaryReport:
    """Per-parameter posterior summaries of one chain."""

    names: list
    mean: np.ndarray
    var: np.ndarray
    ess: np.ndarray
    acceptance: float
    wall_time: float = 0.0
    n_draws: int = 0
    ks_normal: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)

    @property
    def ess_per_10s(self):
        if self.wall_time <= 0:
            return np.full(len(self.names), np.nan)
        return self.ess * 10.0 / self.wall_time

    @classmethod
    def from_trace(cls, trace, with_ks=False):
        X = trace.samples
        e = np.array([_safe_ess(X[:, j]) for j in range(X.shape[1])])
        ks = None
        if with_ks:
            ks = np.array([_safe(ks_normal, X[:, j]) for j in range(X.shape[1])])
        return cls(list(trace.names), X.mean(axis=0), X.var(axis=0), e,
                   trace.acceptance, trace.wall_time, X.shape[0], ks)

    def sections(self, timing=False):
        """Ordered mapping of section name to key/value strings."""
        out = {"chain": {"acceptance": _fmt(self.acceptance),
                         "draws": str(self.n_draws)}}
        for j, name in enumerate(self.names):
            sec = {"mean": _fmt(self.mean[j]), "variance": _fmt(self.var[j]),
                   "ess": _fmt(self.ess[j])}
            if self.ks_normal is not None:
                sec["ks_normal"] = _fmt(self.ks_normal[j])
            if timing:
                sec["ess_per_10s"] = _fmt(self.ess_per_10s[j])
            out[f"param:{name}"] = sec
        if timing:
            out["chain"]["wall_time_s"] = _fmt(self.wall_time)
        return out


def _fmt(v):
    return repr(float(v))


def _safe(fn, x):
    try:
        return fn(x)
    except InvalidInputError:
        return np.nan


def _safe_ess(x):
    if x.size < ESS_MIN_LENGTH:
        return np.nan
    return _safe(ess, x)
