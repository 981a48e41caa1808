"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

The arithmetic follows the compiled code operation for operation, so the
same seed gives the same Polya-Gamma draws on either backend.
"""
import math
from collections import deque

import numpy as np

PG_TRUNC = 0.64
_SQRT1_2 = 0.7071067811865476


def _log_norm_cdf(x):
    return math.log(0.5 * math.erfc(-x * _SQRT1_2))


def _pg_coef(n, x):
    k = (n + 0.5) * math.pi
    if x > PG_TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    return math.exp(-1.5 * (math.log(0.5 * math.pi) + math.log(x)) + math.log(k)
                    - 2.0 * (n + 0.5) * (n + 0.5) / x)


def _pg_mass_texpon(z):
    t = PG_TRUNC
    fz = 0.125 * math.pi * math.pi + 0.5 * z * z
    b = math.sqrt(1.0 / t) * (t * z - 1.0)
    a = -math.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = math.log(fz) + fz * t
    xb = x0 - z + _log_norm_cdf(b)
    xa = x0 + z + _log_norm_cdf(a)
    qdivp = 4.0 / math.pi * (math.exp(xb) + math.exp(xa))
    return 1.0 / (1.0 + qdivp)


def _pg_rtigauss(z, rng):
    t = PG_TRUNC
    x = t + 1.0
    if 1.0 / t > z:
        alpha = 0.0
        while rng.random() > alpha:
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            while e1 * e1 > 2.0 * e2 / t:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
            x = 1.0 + e1 * t
            x = t / (x * x)
            alpha = math.exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = rng.standard_normal()
            y = y * y
            half_mu = 0.5 * mu
            mu_y = mu * y
            x = mu + half_mu * mu_y - half_mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
            if rng.random() > mu / (mu + x):
                x = mu * mu / x
    return x


def _pg_draw(c, rng):
    z = abs(c) * 0.5
    fz = 0.125 * math.pi * math.pi + 0.5 * z * z
    while True:
        if rng.random() < _pg_mass_texpon(z):
            x = PG_TRUNC + rng.standard_exponential() / fz
        else:
            x = _pg_rtigauss(z, rng)
        s = _pg_coef(0, x)
        y = rng.random() * s
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


def pg_sample(c, rng):
    c = np.ascontiguousarray(c, dtype=np.float64)
    return np.array([_pg_draw(float(ci), rng) for ci in c], dtype=np.float64)


def smo_solve(K, y, C, alpha, tol, max_iter):
    n = K.shape[0]
    G = np.empty(n)
    for t in range(n):
        v = 0.0
        for j in range(n):
            if alpha[j] != 0.0:
                v += y[t] * y[j] * K[t, j] * alpha[j]
        G[t] = v - 1.0
    pos = y > 0
    it = 0
    while True:
        score = -y * G
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (~pos & (alpha < C)) | (pos & (alpha > 0))
        if not up.any() or not low.any():
            violation = 0.0
            break
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        violation = float(score[i] - score[j])
        if violation <= tol or it >= max_iter:
            break
        it += 1
        yi, yj = y[i], y[j]
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            eta = 1e-12
        delta = violation / eta
        delta = min(delta, C - alpha[i] if yi > 0 else alpha[i])
        delta = min(delta, alpha[j] if yj > 0 else C - alpha[j])
        alpha[i] = min(max(alpha[i] + yi * delta, 0.0), C)
        alpha[j] = min(max(alpha[j] - yj * delta, 0.0), C)
        G += y * delta * (K[:, i] - K[:, j])
    return it, violation, G


def max_flow(n_nodes, tail, head, cap, source, sink, eps):
    m = len(tail)
    if source == sink:
        return np.zeros(m), 0.0, 0
    adj = [[] for _ in range(n_nodes)]
    for e in range(m):
        adj[tail[e]].append(2 * e)
        adj[head[e]].append(2 * e + 1)
    res = np.zeros(2 * m)
    res[0::2] = cap

    def arc_end(a):
        return head[a >> 1] if (a & 1) == 0 else tail[a >> 1]

    def arc_start(a):
        return tail[a >> 1] if (a & 1) == 0 else head[a >> 1]

    value = 0.0
    augmentations = 0
    while True:
        parent = [-2] * n_nodes
        parent[source] = -1
        queue = deque([source])
        while queue and parent[sink] == -2:
            u = queue.popleft()
            for a in adj[u]:
                if res[a] <= eps:
                    continue
                v = arc_end(a)
                if parent[v] != -2:
                    continue
                parent[v] = a
                queue.append(v)
                if v == sink:
                    break
        if parent[sink] == -2:
            break
        bottleneck = 1e300
        v = sink
        while v != source:
            a = parent[v]
            bottleneck = min(bottleneck, res[a])
            v = arc_start(a)
        v = sink
        while v != source:
            a = parent[v]
            res[a] -= bottleneck
            res[a ^ 1] += bottleneck
            v = arc_start(a)
        value += bottleneck
        augmentations += 1
    return res[1::2].copy(), value, augmentations
