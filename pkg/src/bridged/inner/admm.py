"""Nuclear-norm projection onto graph Laplacians by ADMM.

Solves

    min_zeta  1/2 ||L - zeta||_F^2 + lambda_tilde ||zeta||_*

over Laplacians zeta (symmetric, off-diagonals <= 0, zero row sums) with the
splitting zeta = Z. The zeta-step keeps the Laplacian structure exactly:
only the strictly lower off-diagonal entries are free, the diagonal is their
negated row sums, and a log barrier with weight rho keeps them negative.
Z is updated by singular-value thresholding and W is the scaled dual.
"""
import numpy as np

from bridged.errors import ConvergenceError, InvalidInputError
from bridged.inner import InnerSolution

ADMM_ETA = 1.0
BARRIER_START = 1e-2
BARRIER_FLOOR = 1e-8
BARRIER_DECAY = 0.5
BARRIER_EVERY = 50
ADMM_TOL = 1e-6
ADMM_MAX_ITER = 3000
DIVERGENCE_WINDOW = 100


def is_laplacian(L, atol=1e-10):
    """True if ``L`` is symmetric with nonpositive off-diagonals and zero row sums."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or not np.all(np.isfinite(L)):
        return False
    off = L - np.diag(np.diag(L))
    scale = max(1.0, float(np.max(np.abs(L))))
    return (np.allclose(L, L.T, atol=atol * scale, rtol=0)
            and bool(np.all(off <= atol * scale))
            and bool(np.all(np.abs(L.sum(axis=1)) <= atol * scale * L.shape[0])))


def laplacian_from_offdiag(V):
    """Laplacian whose off-diagonal part is ``V`` (symmetric, zero diagonal)."""
    Z = V.copy()
    np.fill_diagonal(Z, -V.sum(axis=1))
    return Z


def _sym_svt(X, t):
    # singular values of a symmetric matrix are |eigenvalues|
    w, U = np.linalg.eigh(X)
    s = np.sign(w) * np.maximum(np.abs(w) - t, 0.0)
    Z = (U * s) @ U.T
    return 0.5 * (Z + Z.T)


def _zeta_objective(V, C, rho, c1, mask):
    R = laplacian_from_offdiag(V) - C
    return 0.5 * c1 * float(np.sum(R * R)) - rho * float(np.sum(np.log(-V[mask])))


def _zeta_step(V, C, rho, c1, mask, max_newton=50):
    """Newton's method on the free off-diagonal entries.

    The Hessian is diag(d) + c1 M'M with M the node-pair incidence matrix,
    so each Newton system reduces by Woodbury to an R x R solve.
    """
    f = _zeta_objective(V, C, rho, c1, mask)
    for _ in range(max_newton):
        Rm = laplacian_from_offdiag(V) - C
        dg = np.diag(Rm)
        G = c1 * (2.0 * Rm - dg[:, None] - dg[None, :]) - 2.0 * rho / np.where(mask, V, -1.0)
        G[~mask] = 0.0
        d = 2.0 * c1 + 2.0 * rho / np.where(mask, V * V, 1.0)
        dinv = np.where(mask, 1.0 / d, 0.0)
        U = G * dinv
        S = dinv + np.diag(dinv.sum(axis=1) + 1.0 / c1)
        s = np.linalg.solve(S, U.sum(axis=1))
        step_dir = -(U - (s[:, None] + s[None, :]) * dinv)
        # each pair appears twice in the matrix form
        decrement = -0.5 * float(np.sum(G * step_dir))
        # entries near the barrier are tiny, so measure the step relatively
        if float(np.max(np.abs(step_dir[mask] / V[mask]))) <= 1e-10 or decrement <= 0.0:
            break
        pos = step_dir > 0
        tmax = float(np.min(-V[pos] / step_dir[pos])) if np.any(pos) else np.inf
        t = min(1.0, 0.99 * tmax)
        accepted = False
        for _ in range(50):
            V_new = V + t * step_dir
            f_new = _zeta_objective(V_new, C, rho, c1, mask)
            if f_new <= f - 1e-4 * t * decrement + 1e-14 * abs(f):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        V, f = V_new, f_new
    return V


def laplacian_projection_admm(L, lambda_tilde, barrier=BARRIER_START, eta=ADMM_ETA,
                              iters=ADMM_MAX_ITER, tol=ADMM_TOL, warm=None,
                              barrier_floor=BARRIER_FLOOR):
    """Project a Laplacian onto a nuclear-norm ball (penalised form).

    Parameters
    ----------
    L : (R, R) graph Laplacian
    lambda_tilde : float
        Nuclear-norm weight.
    barrier : float
        Initial barrier weight; halved every 50 iterations down to
        ``barrier_floor``. A zero target entry settles near
        -sqrt(barrier / (1 + eta)), so the floor bounds the bias.
    eta : float
        ADMM penalty.
    iters : int
        Iteration budget.
    warm : tuple of (zeta, Z, W), optional
        State from a previous solve, e.g. at a neighbouring ``lambda_tilde``.

    Returns
    -------
    InnerSolution
        ``z`` is the feasible Laplacian iterate; ``residual`` is the primal
        residual ||zeta - Z||_F. ``extras`` holds the dual residual, the
        misfit ||L - z||_F^2, the nuclear norm and the ADMM state.
    """
    L = np.asarray(L, dtype=float)
    if not is_laplacian(L):
        raise InvalidInputError("L is not a valid graph Laplacian")
    if not (lambda_tilde > 0 and np.isfinite(lambda_tilde)):
        raise InvalidInputError("lambda_tilde must be positive")
    if not (barrier > 0 and eta > 0):
        raise InvalidInputError("barrier and eta must be positive")
    R = L.shape[0]
    mask = ~np.eye(R, dtype=bool)
    c1 = 1.0 + eta
    if warm is not None:
        zeta, Z, W = (np.array(a, dtype=float) for a in warm)
        V = zeta * mask
        if np.any(V[mask] >= 0):
            raise InvalidInputError("warm start must have strictly negative off-diagonals")
    else:
        scale = max(1.0, float(np.max(np.abs(L))))
        V = np.minimum(L, -1e-4 * scale) * mask
        Z = laplacian_from_offdiag(V)
        W = np.zeros_like(L)
    thresh = lambda_tilde / eta

    r_prim = r_dual = np.inf
    prev = np.inf
    growth = 0
    k = 0
    for k in range(1, iters + 1):
        rho = max(barrier * BARRIER_DECAY ** ((k - 1) // BARRIER_EVERY), barrier_floor)
        C = (L + eta * (Z - W)) / c1
        V = _zeta_step(V, C, rho, c1, mask)
        zeta = laplacian_from_offdiag(V)
        Z_old = Z
        Z = _sym_svt(zeta + W, thresh)
        W = W + zeta - Z
        r_prim = float(np.linalg.norm(zeta - Z))
        r_dual = eta * float(np.linalg.norm(Z - Z_old))
        growth = growth + 1 if r_prim > prev else 0
        prev = r_prim
        if growth >= DIVERGENCE_WINDOW:
            raise ConvergenceError("ADMM residual grew for 100 consecutive iterations",
                                   residual=r_prim, iterations=k)
        if rho <= barrier_floor and r_prim <= tol and r_dual <= tol:
            break
    else:
        if r_prim > tol or r_dual > tol:
            raise ConvergenceError(f"ADMM did not converge in {iters} iterations",
                                   residual=max(r_prim, r_dual), iterations=iters)
    zeta = laplacian_from_offdiag(V)
    misfit = float(np.sum((L - zeta) ** 2))
    nuc = float(np.sum(np.abs(np.linalg.eigvalsh(zeta))))
    return InnerSolution(
        z=zeta, objective=0.5 * misfit + lambda_tilde * nuc, iterations=k,
        residual=r_prim,
        extras={"dual_residual": r_dual, "misfit": misfit, "nuclear": nuc,
                "state": (zeta, Z, W), "barrier": rho},
    )
