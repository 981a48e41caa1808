# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Each function mirrors one in ``_pykernels`` statement for statement, and
draws from the caller's ``numpy.random.Generator`` through the same
distribution routines numpy's Python API uses, so both backends consume the
bit stream identically.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, sqrt, fabs, erfc, M_PI
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_uniform,
    random_standard_exponential,
    random_standard_normal,
)

cdef double PG_TRUNC = 0.64
cdef double SQRT1_2 = 0.7071067811865476


cdef inline double _log_norm_cdf(double x) nogil:
    return log(0.5 * erfc(-x * SQRT1_2))


cdef inline double _pg_coef(int n, double x) nogil:
    cdef double k = (n + 0.5) * M_PI
    if x > PG_TRUNC:
        return k * exp(-0.5 * k * k * x)
    return exp(-1.5 * (log(0.5 * M_PI) + log(x)) + log(k)
               - 2.0 * (n + 0.5) * (n + 0.5) / x)


cdef inline double _pg_mass_texpon(double z) nogil:
    cdef double t = PG_TRUNC
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double b = sqrt(1.0 / t) * (t * z - 1.0)
    cdef double a = -sqrt(1.0 / t) * (t * z + 1.0)
    cdef double x0 = log(fz) + fz * t
    cdef double xb = x0 - z + _log_norm_cdf(b)
    cdef double xa = x0 + z + _log_norm_cdf(a)
    cdef double qdivp = 4.0 / M_PI * (exp(xb) + exp(xa))
    return 1.0 / (1.0 + qdivp)


cdef double _pg_rtigauss(double z, bitgen_t *bg) nogil:
    cdef double t = PG_TRUNC
    cdef double x = t + 1.0
    cdef double alpha, e1, e2, mu, y, half_mu, mu_y
    if 1.0 / t > z:
        alpha = 0.0
        while random_standard_uniform(bg) > alpha:
            e1 = random_standard_exponential(bg)
            e2 = random_standard_exponential(bg)
            while e1 * e1 > 2.0 * e2 / t:
                e1 = random_standard_exponential(bg)
                e2 = random_standard_exponential(bg)
            x = 1.0 + e1 * t
            x = t / (x * x)
            alpha = exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = random_standard_normal(bg)
            y = y * y
            half_mu = 0.5 * mu
            mu_y = mu * y
            x = mu + half_mu * mu_y - half_mu * sqrt(4.0 * mu_y + mu_y * mu_y)
            if random_standard_uniform(bg) > mu / (mu + x):
                x = mu * mu / x
    return x


cdef double _pg_draw(double c, bitgen_t *bg) nogil:
    cdef double z = fabs(c) * 0.5
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double x, s, y
    cdef int n
    while True:
        if random_standard_uniform(bg) < _pg_mass_texpon(z):
            x = PG_TRUNC + random_standard_exponential(bg) / fz
        else:
            x = _pg_rtigauss(z, bg)
        s = _pg_coef(0, x)
        y = random_standard_uniform(bg) * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s = s - _pg_coef(n, x)
                if y <= s:
                    return 0.25 * x
            else:
                s = s + _pg_coef(n, x)
                if y > s:
                    break


def pg_sample(double[::1] c, rng):
    """Exact PG(1, c_i) draws, one per entry of ``c``."""
    cdef Py_ssize_t i, m = c.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    capsule = rng.bit_generator.capsule
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    with rng.bit_generator.lock, nogil:
        for i in range(m):
            ov[i] = _pg_draw(c[i], bg)
    return out


def smo_solve(double[:, ::1] K, double[::1] y, double C, double[::1] alpha,
              double tol, long max_iter):
    """Pairwise SMO on the box-constrained SVM dual, modifying ``alpha`` in place.

    Returns ``(iterations, violation, grad)`` where ``grad`` is Q alpha - 1.
    """
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef double m_up, m_low, v, eta, delta, lim, yi, yj
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] G = grad_arr
    for t in range(n):
        v = 0.0
        for j in range(n):
            if alpha[j] != 0.0:
                v += y[t] * y[j] * K[t, j] * alpha[j]
        G[t] = v - 1.0
    cdef double violation = 0.0
    with nogil:
        while True:
            i = -1
            j = -1
            m_up = -1e300
            m_low = 1e300
            for t in range(n):
                v = -y[t] * G[t]
                if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                    if v > m_up:
                        m_up = v
                        i = t
                if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                    if v < m_low:
                        m_low = v
                        j = t
            if i < 0 or j < 0:
                violation = 0.0
                break
            violation = m_up - m_low
            if violation <= tol or it >= max_iter:
                break
            it += 1
            yi = y[i]
            yj = y[j]
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta <= 1e-12:
                eta = 1e-12
            delta = violation / eta
            lim = C - alpha[i] if yi > 0 else alpha[i]
            if delta > lim:
                delta = lim
            lim = alpha[j] if yj > 0 else C - alpha[j]
            if delta > lim:
                delta = lim
            alpha[i] = alpha[i] + yi * delta
            alpha[j] = alpha[j] - yj * delta
            if alpha[i] < 0.0:
                alpha[i] = 0.0
            elif alpha[i] > C:
                alpha[i] = C
            if alpha[j] < 0.0:
                alpha[j] = 0.0
            elif alpha[j] > C:
                alpha[j] = C
            for t in range(n):
                G[t] = G[t] + y[t] * delta * (K[t, i] - K[t, j])
    return it, violation, grad_arr


def max_flow(long n_nodes, long[::1] tail, long[::1] head, double[::1] cap,
             long source, long sink, double eps):
    """Shortest-augmenting-path max flow with arcs scanned in edge order.

    Returns ``(flows, value, augmentations)``.
    """
    cdef Py_ssize_t m = tail.shape[0]
    cdef Py_ssize_t e, a, u, v, k, qh, qt
    cdef long augmentations = 0
    cdef double bottleneck, value = 0.0

    deg_arr = np.zeros(n_nodes + 1, dtype=np.int64)
    cdef long[::1] start = deg_arr
    for e in range(m):
        start[tail[e] + 1] += 1
        start[head[e] + 1] += 1
    for u in range(n_nodes):
        start[u + 1] += start[u]
    fill_arr = np.array(deg_arr[:n_nodes], dtype=np.int64)
    cdef long[::1] fill = fill_arr
    adj_arr = np.empty(2 * m, dtype=np.int64)
    cdef long[::1] adj = adj_arr
    # arc 2e runs tail->head, arc 2e+1 runs head->tail
    for e in range(m):
        adj[fill[tail[e]]] = 2 * e
        fill[tail[e]] += 1
        adj[fill[head[e]]] = 2 * e + 1
        fill[head[e]] += 1
    res_arr = np.zeros(2 * m, dtype=np.float64)
    cdef double[::1] res = res_arr
    for e in range(m):
        res[2 * e] = cap[e]
    parent_arr = np.empty(n_nodes, dtype=np.int64)
    cdef long[::1] parent = parent_arr
    queue_arr = np.empty(n_nodes, dtype=np.int64)
    cdef long[::1] queue = queue_arr

    if source == sink:
        return np.zeros(m), 0.0, 0
    with nogil:
        while True:
            for u in range(n_nodes):
                parent[u] = -2
            parent[source] = -1
            qh = 0
            qt = 0
            queue[qt] = source
            qt += 1
            while qh < qt and parent[sink] == -2:
                u = queue[qh]
                qh += 1
                for k in range(start[u], start[u + 1]):
                    a = adj[k]
                    if res[a] <= eps:
                        continue
                    v = head[a >> 1] if (a & 1) == 0 else tail[a >> 1]
                    if parent[v] != -2:
                        continue
                    parent[v] = a
                    queue[qt] = v
                    qt += 1
                    if v == sink:
                        break
            if parent[sink] == -2:
                break
            bottleneck = 1e300
            v = sink
            while v != source:
                a = parent[v]
                if res[a] < bottleneck:
                    bottleneck = res[a]
                v = tail[a >> 1] if (a & 1) == 0 else head[a >> 1]
            v = sink
            while v != source:
                a = parent[v]
                res[a] -= bottleneck
                res[a ^ 1] += bottleneck
                v = tail[a >> 1] if (a & 1) == 0 else head[a >> 1]
            value += bottleneck
            augmentations += 1
    flows = np.empty(m, dtype=np.float64)
    for e in range(m):
        flows[e] = res[2 * e + 1]
    return flows, value, augmentations
