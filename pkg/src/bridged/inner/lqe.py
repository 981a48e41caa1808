"""Dual ascent for the latent quadratic exponential model.

The primal problem is

    min_z  1/2 z' Q^{-1} z + sum_i [log(1 + e^{z_i}) - y_i z_i]

and its Lagrangian dual, with p = alpha + y restricted to the open unit box,

    g_dual(alpha) = -1/2 alpha' Q alpha - sum_i [p_i log p_i + (1 - p_i) log(1 - p_i)].

Neither the dual nor its derivatives touch Q^{-1}; the primal solution is
recovered as z = -Q alpha and z' Q^{-1} z = alpha' Q alpha.
"""
import numpy as np
from scipy.special import xlogy

from bridged.errors import ConvergenceError, DecompositionError, InvalidInputError
from bridged.inner import BOX_MARGIN, INNER_MAX_ITER, INNER_TOL, InnerSolution
from bridged.numerics import cholesky, cholesky_solve, log1pexp


def _neg_entropy(p):
    return float(np.sum(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)))


def lqe_dual_value(alpha, y, Q):
    """Dual function at ``alpha``; ``-inf`` outside the feasible box."""
    alpha = np.asarray(alpha, dtype=float)
    p = alpha + y
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        return -np.inf
    return -0.5 * float(alpha @ (Q @ alpha)) - _neg_entropy(p)


def lqe_primal_value(z, y, quad):
    """Primal objective given z and the quadratic form z' Q^{-1} z."""
    z = np.asarray(z, dtype=float)
    return 0.5 * quad + float(np.sum(log1pexp(z) - y * z))


def _validate(y, Q):
    y = np.asarray(y, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if y.ndim != 1:
        raise InvalidInputError("y must be a vector")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise InvalidInputError("y must be binary (0/1)")
    n = y.shape[0]
    if Q.shape != (n, n):
        raise InvalidInputError(f"Q must be {n}x{n}, got {Q.shape}")
    return y, Q


def dual_ascent_lqe(y, Q, tol=INNER_TOL, warm=None, max_iter=INNER_MAX_ITER,
                    margin=BOX_MARGIN):
    """Maximise the dual by projected Newton with backtracking.

    Parameters
    ----------
    y : (n,) array of 0/1 labels
    Q : (n, n) PSD covariance matrix
    tol : float
        Stop when the sup-norm of the dual gradient is at most ``tol``.
    warm : (n,) array, optional
        Strictly feasible starting dual vector.

    Returns
    -------
    InnerSolution
        ``z = -Q alpha``, ``dual = alpha``; extras carry ``quad``
        (alpha' Q alpha), ``dual_value`` and ``gap``.
    """
    y, Q = _validate(y, Q)
    if warm is None:
        alpha = 0.5 - y
    else:
        alpha = np.array(warm, dtype=float)
        if alpha.shape != y.shape:
            raise InvalidInputError("warm start has the wrong length")
        p0 = alpha + y
        if np.any(p0 <= 0.0) or np.any(p0 >= 1.0):
            raise InvalidInputError("warm start is not strictly dual feasible")
    lo, hi = margin, 1.0 - margin
    alpha = np.clip(alpha + y, lo, hi) - y

    Qa = Q @ alpha
    p = alpha + y
    fval = -0.5 * float(alpha @ Qa) - _neg_entropy(p)
    it = 0
    while True:
        grad = -Qa - (np.log(p) - np.log1p(-p))
        res = float(np.max(np.abs(grad))) if grad.size else 0.0
        if res <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"dual ascent hit the iteration cap ({max_iter})", residual=res,
                iterations=it)
        it += 1
        H = Q + np.diag(1.0 / (p * (1.0 - p)))
        try:
            direction = cholesky_solve(H, grad, factor=cholesky(H))
        except DecompositionError:
            # Q numerically indefinite; fall back to the diagonal curvature
            direction = grad * p * (1.0 - p)
        step = 1.0
        accepted = False
        # differences below roundoff of |f| cannot be resolved
        slack = 1e-14 * max(1.0, abs(fval))
        for _ in range(60):
            p_new = np.clip(p + step * direction, lo, hi)
            a_new = p_new - y
            Qa_new = Q @ a_new
            f_new = -0.5 * float(a_new @ Qa_new) - _neg_entropy(p_new)
            if f_new >= fval + 1e-4 * float(grad @ (a_new - alpha)) - slack:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # Roundoff floor: the dual value can no longer resolve progress.
            p_new = np.clip(p + direction, lo, hi)
            a_new = p_new - y
            Qa_new = Q @ a_new
            g_new = -Qa_new - (np.log(p_new) - np.log1p(-p_new))
            if float(np.max(np.abs(g_new))) >= res:
                raise ConvergenceError(
                    "dual ascent stalled before reaching tolerance", residual=res,
                    iterations=it)
            f_new = -0.5 * float(a_new @ Qa_new) - _neg_entropy(p_new)
        alpha, p, Qa, fval = a_new, p_new, Qa_new, f_new

    z = -Qa
    quad = float(alpha @ Qa)
    primal = lqe_primal_value(z, y, quad)
    return InnerSolution(
        z=z, objective=primal, dual=alpha, iterations=it, residual=res,
        extras={"quad": quad, "dual_value": fval, "gap": primal - fval},
    )
