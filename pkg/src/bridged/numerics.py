"""Dense linear algebra, covariance kernels, SPD geodesics, singular-value
shrinkage and the Polya-Gamma sampler."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular
from scipy.spatial.distance import pdist, squareform

from bridged import kernels
from bridged.errors import DecompositionError, InvalidInputError

GEODESIC_ETA = 1e-6


# -- random numbers -----------------------------------------------------------

def make_rng(seed):
    """Counter-based generator (Philox) seeded through a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def spawn_rngs(seed, n):
    """``n`` independent child generators derived from one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]


# -- scalar transforms ----------------------------------------------------------

def softplus(x):
    x = np.asarray(x, dtype=float)
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    y = np.asarray(y, dtype=float)
    # log(expm1(y)) without overflow for large y
    big = np.maximum(y, 30.0)
    return np.where(y > 30.0, big + np.log1p(-np.exp(-big)),
                    np.log(np.expm1(np.minimum(y, 30.0))))


def log_sigmoid(x):
    x = np.asarray(x, dtype=float)
    return -np.logaddexp(0.0, -x)


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    return np.exp(log_sigmoid(x))


def log1pexp(x):
    """log(1 + e^x), stable for large |x|."""
    return np.logaddexp(0.0, np.asarray(x, dtype=float))


# -- symmetric matrices -------------------------------------------------------

def symmetrize(A):
    """Exactly symmetric copy of ``A``: (A + A^T) / 2 is bitwise symmetric."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class CovKernelParams:
    """Squared-exponential kernel scale ``tau`` and bandwidth ``b``."""

    tau: float
    b: float

    def __post_init__(self):
        if not (self.tau > 0 and np.isfinite(self.tau)):
            raise InvalidInputError(f"tau must be positive, got {self.tau}")
        if not (self.b > 0 and np.isfinite(self.b)):
            raise InvalidInputError(f"b must be positive, got {self.b}")


def _as_locations(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInputError("locations must be a non-empty (n,) or (n, d) array")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("locations contain non-finite values")
    return x


def squared_distances(x):
    """Pairwise squared Euclidean distances, exactly symmetric, zero diagonal."""
    x = _as_locations(x)
    if x.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(x, "sqeuclidean"))


def squared_exp_kernel(x, params=None, *, tau=None, b=None, sq_dists=None):
    """Q_ij = tau * exp(-||x_i - x_j||^2 / (2 b)).

    Either pass a :class:`CovKernelParams` or ``tau`` and ``b`` directly.
    ``sq_dists`` lets callers reuse a precomputed distance matrix.
    """
    if params is None:
        params = CovKernelParams(float(tau), float(b))
    d2 = squared_distances(x) if sq_dists is None else sq_dists
    return params.tau * np.exp(-d2 / (2.0 * params.b))


# -- Cholesky -------------------------------------------------------------------

def cholesky(A, lower=True):
    """Cholesky factor of a symmetric positive definite matrix.

    Raises :class:`DecompositionError` with the zero-based index of the first
    non-positive pivot.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    c, info = lapack.dpotrf(A, lower=lower, clean=True, overwrite_a=False)
    if info > 0:
        raise DecompositionError(
            f"matrix is not positive definite (pivot {info - 1})", pivot=info - 1)
    if info < 0:
        raise InvalidInputError(f"dpotrf argument {-info} invalid")
    return c


def cholesky_solve(A, rhs, factor=None):
    """Solve A x = rhs for symmetric positive definite A."""
    L = cholesky(A) if factor is None else factor
    rhs = np.asarray(rhs, dtype=float)
    x, info = lapack.dpotrs(L, rhs, lower=True)
    if info != 0:
        raise InvalidInputError(f"dpotrs argument {-info} invalid")
    return x


def chol_logdet(L):
    """log det(A) from its lower Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(L))))


# -- SPD geometry ---------------------------------------------------------------

def _check_pair(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidInputError(f"size mismatch: {X.shape} vs {Y.shape}")
    return X, Y


def generalized_eigvals(X, Y, eta=GEODESIC_ETA, factor_x=None):
    """Eigenvalues of (X + eta I)^{-1} (Y + eta I) via symmetric reduction."""
    X, Y = _check_pair(X, Y)
    n = X.shape[0]
    eye = np.eye(n)
    L = cholesky(X + eta * eye) if factor_x is None else factor_x
    T = solve_triangular(L, Y + eta * eye, lower=True)
    M = solve_triangular(L, T.T, lower=True)
    return np.linalg.eigvalsh(symmetrize(M))


def geodesic_distance(X, Y, eta=GEODESIC_ETA):
    """Affine-invariant distance between PSD matrices regularised by ``eta``."""
    if not eta > 0:
        raise InvalidInputError("eta must be positive")
    xi = generalized_eigvals(X, Y, eta)
    xi = np.maximum(xi, np.finfo(float).tiny)
    return float(np.sqrt(np.sum(np.log(xi) ** 2)))


def pairwise_geodesic(mats, eta=GEODESIC_ETA):
    """All pairwise geodesic distances for a stack of (m, R, R) PSD matrices.

    Each matrix is factorised once; the whitened form is reused for every
    pair it takes part in.
    """
    mats = np.asarray(mats, dtype=float)
    m, R, _ = mats.shape
    eye = np.eye(R)
    factors = [cholesky(mats[i] + eta * eye) for i in range(m)]
    D = np.zeros((m, m))
    for i in range(m):
        L = factors[i]
        for j in range(i + 1, m):
            T = solve_triangular(L, mats[j] + eta * eye, lower=True)
            M = solve_triangular(L, T.T, lower=True)
            xi = np.maximum(np.linalg.eigvalsh(symmetrize(M)), np.finfo(float).tiny)
            D[i, j] = D[j, i] = np.sqrt(np.sum(np.log(xi) ** 2))
    return D


# -- nuclear-norm shrinkage -------------------------------------------------------

def svd_soft_threshold(X, t):
    """Singular-value soft thresholding: sum_i (s_i - t)_+ u_i v_i^T."""
    if t < 0:
        raise InvalidInputError("threshold must be nonnegative")
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("matrix contains non-finite values")
    if t == 0:
        return X.copy()
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    s = np.maximum(s - t, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


def nuclear_norm(X):
    return float(np.sum(np.linalg.svd(np.asarray(X, dtype=float), compute_uv=False)))


# -- Polya-Gamma ----------------------------------------------------------------

def polya_gamma_sample(c, rng):
    """Exact draws from PG(1, c) (elementwise for array ``c``)."""
    scalar = np.ndim(c) == 0
    arr = np.ascontiguousarray(np.atleast_1d(c), dtype=np.float64)
    out = kernels.pg_sample(arr, rng)
    return float(out[0]) if scalar else out


def pg_mean(c):
    """Analytic E[PG(1, c)] = tanh(c/2) / (2c), 1/4 at c = 0."""
    c = np.abs(np.asarray(c, dtype=float))
    safe = np.where(c < 1e-8, 1.0, c)
    return np.where(c < 1e-8, 0.25, np.tanh(safe / 2.0) / (2.0 * safe))


def pg_var(c):
    """Analytic Var[PG(1, c)] = (sinh c - c) / (4 c^3 cosh^2(c/2)), 1/24 at 0."""
    c = np.abs(np.asarray(c, dtype=float))
    safe = np.where(c < 1e-3, 1.0, c)
    v = (np.sinh(safe) - safe) / (4.0 * safe ** 3 * np.cosh(safe / 2.0) ** 2)
    # series near zero: 1/24 - c^2/120 + ...
    return np.where(c < 1e-3, 1.0 / 24.0 - c ** 2 / 120.0, v)
