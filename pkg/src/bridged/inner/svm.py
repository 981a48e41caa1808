"""Soft-margin linear SVM through its box-constrained dual.

Primal, with C = 1/lambda:

    min_{w, b}  lambda/2 ||w||^2 + sum_i max(0, 1 - y_i (x_i'w + b))

Dual (scaled by lambda so its value lower-bounds the primal):

    max_alpha  lambda * (sum_i alpha_i - 1/2 alpha'Q alpha),
    0 <= alpha_i <= C,  y'alpha = 0,   Q_ij = y_i y_j x_i'x_j.
"""
import numpy as np

from bridged import kernels
from bridged.errors import ConvergenceError, InvalidInputError
from bridged.inner import INNER_TOL, InnerSolution

# SMO takes many cheap pairwise steps; the cap is counted in pair updates.
SMO_MAX_ITER = 200_000


def svm_primal_value(w, b, X, y, lam):
    margins = y * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.sum(np.maximum(0.0, 1.0 - margins)))


def svm_dual_value(alpha, X, y, lam):
    """Dual value; ``-inf`` if ``alpha`` is infeasible."""
    alpha = np.asarray(alpha, dtype=float)
    C = 1.0 / lam
    if np.any(alpha < 0) or np.any(alpha > C) or abs(float(y @ alpha)) > 1e-9 * max(1.0, C):
        return -np.inf
    w = X.T @ (alpha * y)
    return lam * (float(alpha.sum()) - 0.5 * float(w @ w))


def _validate(X, y, lam):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise InvalidInputError("X must be (n, p) and y of length n")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise InvalidInputError("labels must be -1 or +1")
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidInputError(f"lambda must be positive, got {lam}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("X contains non-finite values")
    return X, y, float(lam)


def _repair(alpha, y, C):
    """Clip to the box, then greedily restore y'alpha = 0."""
    alpha = np.clip(np.asarray(alpha, dtype=float), 0.0, C)
    excess = float(y @ alpha)
    if excess != 0.0:
        # shrink entries on the side carrying the excess, largest first
        side = y > 0 if excess > 0 else y < 0
        for i in np.flatnonzero(side)[np.argsort(-alpha[side], kind="stable")]:
            cut = min(alpha[i], abs(excess))
            alpha[i] -= cut
            excess -= np.sign(excess) * cut
            if abs(excess) <= 0.0:
                break
    return alpha


def _hinge_bias(s, y):
    """Exact minimiser of sum_i max(0, 1 - y_i (s_i + b)) over b.

    The objective is piecewise linear with breakpoints y_i - s_i; the midpoint
    of the optimal interval is returned.
    """
    c = np.sort(y - s)
    vals = np.array([np.sum(np.maximum(0.0, 1.0 - y * (s + b))) for b in c])
    best = vals.min()
    opt = c[vals <= best + 1e-12 * max(1.0, best)]
    return 0.5 * (opt[0] + opt[-1])


def svm_dual_solve(X, y, lam, warm=None, tol=INNER_TOL, max_iter=SMO_MAX_ITER,
                   gram=None):
    """Solve the soft-margin SVM by SMO with first-order working-set selection.

    Parameters
    ----------
    X : (n, p) features
    y : (n,) labels in {-1, +1}
    lam : float
        Regularisation weight; the dual box is [0, 1/lam].
    warm : (n,) array, optional
        Previous dual vector. It is clipped and rebalanced to be feasible.
    gram : (n, n) array, optional
        Precomputed X X'.

    Returns
    -------
    InnerSolution
        ``z`` is ``[w, b]``; extras hold ``w``, ``b``, ``hinge`` and the
        ``dual_value``.
    """
    X, y, lam = _validate(X, y, lam)
    n = X.shape[0]
    C = 1.0 / lam
    K = np.ascontiguousarray(X @ X.T if gram is None else gram, dtype=np.float64)
    alpha = np.zeros(n) if warm is None else _repair(warm, y, C)
    if alpha.shape != (n,):
        raise InvalidInputError("warm start has the wrong length")
    alpha = np.ascontiguousarray(alpha)
    it, violation, G = kernels.smo_solve(K, np.ascontiguousarray(y), C, alpha,
                                         float(tol), int(max_iter))
    if violation > tol:
        raise ConvergenceError(f"SMO hit the iteration cap ({max_iter})",
                               residual=violation, iterations=it)
    G = np.asarray(G)
    w = X.T @ (alpha * y)
    eps = 1e-12 * C
    free = (alpha > eps) & (alpha < C - eps)
    if np.any(free):
        b = -float(np.mean(y[free] * G[free]))
    else:
        b = float(_hinge_bias(X @ w, y))
    hinge = float(np.sum(np.maximum(0.0, 1.0 - y * (X @ w + b))))
    obj = 0.5 * lam * float(w @ w) + hinge
    dual_value = lam * (float(alpha.sum()) - 0.5 * float(w @ w))
    return InnerSolution(
        z=np.append(w, b), objective=obj, dual=alpha, iterations=int(it),
        residual=float(violation),
        extras={"w": w, "b": b, "hinge": hinge, "dual_value": dual_value},
    )
