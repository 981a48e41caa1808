"""Synthetic data generators and dataset loaders."""
import csv
import os
from dataclasses import dataclass

import numpy as np

from bridged.errors import InvalidInputError
from bridged.inner import FlowNetwork, max_flow_solve
from bridged.inner.admm import is_laplacian
from bridged.numerics import make_rng, spawn_rngs

LQE_RANGE = 6.0
FLOW_EDGE_DENSITY = 371 / 780          # 371 of the 40 * 39 / 2 forward pairs
COX_BOUNDARIES = (0.0, 0.2, 0.5, 1.0, 2.0, np.inf)
COX_RATES = (0.5, 1.0, 1.5, 0.8, 1.2)


# -- latent quadratic exponential ------------------------------------------------

@dataclass
class LQEData:
    x: np.ndarray
    y: np.ndarray
    z_true: np.ndarray


def gen_lqe_data(n, seed=0):
    """x ~ Uniform(-6, 6), y ~ Bernoulli(sigmoid(cos x))."""
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    rng = make_rng(seed)
    x = rng.uniform(-LQE_RANGE, LQE_RANGE, n)
    z = np.cos(x)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-z))).astype(float)
    return LQEData(x, y, z)


# -- flow network ----------------------------------------------------------------------

@dataclass
class FlowData:
    net: FlowNetwork
    Y: np.ndarray
    z_true: np.ndarray
    true_capacity: np.ndarray


def _random_dag(nodes, n_edges, rng):
    """Forward edges i < j; every node reachable from 0 and reaching nodes-1."""
    pairs = set()
    for j in range(1, nodes):
        pairs.add((int(rng.integers(0, j)), j))
    for i in range(nodes - 1):
        pairs.add((i, int(rng.integers(i + 1, nodes))))
    all_pairs = [(i, j) for i in range(nodes) for j in range(i + 1, nodes)]
    rest = [p for p in all_pairs if p not in pairs]
    extra = max(0, n_edges - len(pairs))
    if extra:
        pick = rng.choice(len(rest), size=min(extra, len(rest)), replace=False)
        pairs.update(rest[k] for k in pick)
    edges = sorted(pairs)
    return np.array([e[0] for e in edges]), np.array([e[1] for e in edges])


def gen_flow_network(nodes=40, seed=0, n_edges=None, n_uncertain=5, n_rep=500, noise_sd=1.0,
                     max_tries=20):
    """Random DAG with one source (node 0) and one sink (last node).

    Capacities are Uniform(2, 10). The uncertain edges are drawn among the
    saturated edges of the maximum flow, topped up with other flow-carrying
    edges when there are too few. Replicates are N(z0, noise_sd^2) per edge.
    """
    if nodes < 3:
        raise InvalidInputError("need at least three nodes")
    if n_edges is None:
        n_edges = int(round(FLOW_EDGE_DENSITY * nodes * (nodes - 1) / 2))
    for rng in spawn_rngs(seed, max_tries):
        tail, head = _random_dag(nodes, n_edges, rng)
        cap = rng.uniform(2.0, 10.0, tail.size)
        net = FlowNetwork(nodes, tail, head, cap, 0, nodes - 1)
        sol = max_flow_solve(net)
        if sol.objective <= 0:
            continue
        z0 = sol.z
        carrying = np.flatnonzero(z0 > 1e-9)
        saturated = np.flatnonzero(np.abs(z0 - cap) <= 1e-9)
        if carrying.size < n_uncertain:
            continue
        first = rng.permutation(saturated)[:n_uncertain]
        rest = rng.permutation(np.setdiff1d(carrying, first))[: n_uncertain - first.size]
        unc = np.sort(np.concatenate([first, rest])).astype(np.int64)
        net = FlowNetwork(nodes, tail, head, cap, 0, nodes - 1, uncertain=unc)
        Y = z0 + noise_sd * rng.standard_normal((n_rep, tail.size))
        return FlowData(net, Y, z0, cap[unc])
    raise InvalidInputError("could not generate a network with positive maximum flow")


# -- partially labelled classification --------------------------------------------------

@dataclass
class LabelledData:
    X: np.ndarray
    labels: np.ndarray              # -1/+1 truth for every point
    unlabeled: np.ndarray           # indices whose labels are hidden from the model


def gen_bmmc_toy(n_labeled=30, n_unlabeled=6, seed=0, dim=2, separation=1.0):
    """Two Gaussian classes at +/- separation/sqrt(dim) per coordinate, unit variance.

    Classes alternate so both are present among labelled and unlabelled points.
    """
    if n_labeled < 2 or n_unlabeled < 1:
        raise InvalidInputError("need at least two labelled and one unlabelled point")
    rng = make_rng(seed)
    m = n_labeled + n_unlabeled
    labels = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    centre = separation / np.sqrt(dim)
    X = labels[:, None] * centre + rng.standard_normal((m, dim))
    return LabelledData(X, labels, np.arange(n_labeled, m))


# -- Cox ---------------------------------------------------------------------------------

@dataclass
class CoxData:
    times: np.ndarray
    x: np.ndarray
    boundaries: np.ndarray
    rates: np.ndarray
    lam: float


def gen_cox_data(n=500, seed=0, lam0=0.8, boundaries=COX_BOUNDARIES, rates=COX_RATES):
    """Survival times with hazard exp(lam0 x) r(t), r piecewise constant.

    Each time solves H(t) exp(lam0 x) = E with E ~ Exp(1) and H the
    cumulative baseline hazard.
    """
    e = np.asarray(boundaries, dtype=float)
    r = np.asarray(rates, dtype=float)
    if e.size != r.size + 1 or e[0] != 0.0 or np.any(np.diff(e) <= 0) or np.any(r <= 0):
        raise InvalidInputError("need increasing boundaries from 0 and positive rates")
    if np.isfinite(e[-1]):
        raise InvalidInputError("last boundary must be infinite so every time is finite")
    rng = make_rng(seed)
    x = rng.standard_normal(n)
    target = rng.exponential(size=n) / np.exp(lam0 * x)
    widths = np.diff(e[:-1])
    cum = np.concatenate([[0.0], np.cumsum(r[:-1] * widths)])     # H at each left edge
    k = np.searchsorted(cum, target, side="right") - 1
    times = e[k] + (target - cum[k]) / r[k]
    return CoxData(times, x, e, r, lam0)


# -- harmonisation -----------------------------------------------------------------------

@dataclass
class HarmonizationData:
    laplacians: np.ndarray          # (S, R, R)
    groups: np.ndarray              # (S,)
    communities: tuple              # community count per group
    clean: np.ndarray               # noiseless Laplacians


def laplacian_from_weights(W):
    W = np.triu(W, 1)
    W = W + W.T
    return np.diag(W.sum(axis=1)) - W


def _block_weights(R, k, rng):
    sizes = np.full(k, R // k)
    sizes[: R % k] += 1
    comm = np.repeat(np.arange(k), sizes)
    same = comm[:, None] == comm[None, :]
    return np.where(same, rng.uniform(0.5, 1.5, (R, R)), 0.0)


def gen_harmonization_synthetic(S=20, R=24, groups=(3, 4), seed=0, noise=(0.002, 0.1)):
    """Noisy Laplacians from two planted groups.

    Subjects alternate between the groups. Each subject's clean graph has
    dense Uniform(0.5, 1.5) weights inside ``groups[g]`` equal-sized
    communities and none across them, so its Laplacian has exactly that
    many zero eigenvalues. The observed graph adds a weight
    ``level * Uniform(0, 1)`` on every pair, with a subject-specific
    ``level ~ Uniform(*noise)``; this connects the communities and makes
    the near-null spectrum differ from subject to subject.
    """
    if S < 2 or R < 4:
        raise InvalidInputError("need S >= 2 and R >= 4")
    if any(k < 1 or k > R for k in groups):
        raise InvalidInputError("community counts must be in [1, R]")
    lo, hi = noise
    if not 0 <= lo <= hi:
        raise InvalidInputError("noise must be a range 0 <= lo <= hi")
    rng = make_rng(seed)
    labels = np.arange(S) % len(groups)
    L = np.empty((S, R, R))
    clean = np.empty((S, R, R))
    for s in range(S):
        Wc = _block_weights(R, groups[labels[s]], rng)
        level = rng.uniform(lo, hi)
        Wn = level * rng.random((R, R))
        clean[s] = laplacian_from_weights(Wc)
        L[s] = laplacian_from_weights(Wc + Wn)
    return HarmonizationData(L, labels, tuple(groups), clean)


# -- loaders -----------------------------------------------------------------------------

def load_table(path, delimiter=","):
    """Header plus a rectangular float matrix from a delimited text file."""
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise InvalidInputError(f"{path}: empty table")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise InvalidInputError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric entry ({exc})") from None
    return header, data.reshape(len(body), len(header))


@dataclass
class HeartFailureData:
    X: np.ndarray
    y: np.ndarray                   # 0/1
    group: np.ndarray               # 1 = men
    features: list


def load_heart_failure(path, label="DEATH_EVENT", group="sex", delimiter=","):
    """Clinical-records table; all other columns become standardised features.

    The label column must be 0/1. The group column (1 = men in the public
    table) is kept as a feature and also returned for stratified masking.
    """
    header, data = load_table(path, delimiter)
    for col in (label, group):
        if col not in header:
            raise InvalidInputError(f"{path}: missing column {col!r}")
    y = data[:, header.index(label)]
    if not np.all((y == 0) | (y == 1)):
        raise InvalidInputError(f"{path}: column {label!r} must be binary")
    keep = [i for i, h in enumerate(header) if h != label]
    X = data[:, keep]
    sd = X.std(axis=0)
    X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return HeartFailureData(X, y, data[:, header.index(group)], [header[i] for i in keep])


def stratified_mask(group, counts, seed=0):
    """Indices to hide: ``counts[g]`` drawn at random from each group value g."""
    rng = make_rng(seed)
    group = np.asarray(group)
    out = []
    for g, c in sorted(counts.items()):
        idx = np.flatnonzero(group == g)
        if c > idx.size:
            raise InvalidInputError(f"cannot mask {c} of {idx.size} in group {g}")
        out.append(rng.choice(idx, size=c, replace=False))
    return np.sort(np.concatenate(out))


def load_laplacians(directory, delimiter=","):
    """Every ``*.csv`` square matrix in ``directory`` (sorted by name)."""
    if not os.path.isdir(directory):
        raise FileNotFoundError(directory)
    names = sorted(f for f in os.listdir(directory) if f.endswith(".csv"))
    if not names:
        raise InvalidInputError(f"{directory}: no .csv matrices")
    mats = []
    for name in names:
        path = os.path.join(directory, name)
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
        try:
            M = np.array([[float(v) for v in r] for r in rows], dtype=float)
        except ValueError:
            raise InvalidInputError(f"{path}: non-numeric or ragged matrix") from None
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InvalidInputError(f"{path}: matrix is not square")
        if not is_laplacian(M, atol=1e-8):
            raise InvalidInputError(f"{path}: not a graph Laplacian")
        mats.append(M)
    if len({m.shape for m in mats}) != 1:
        raise InvalidInputError(f"{directory}: matrices differ in size")
    return np.array(mats), names
