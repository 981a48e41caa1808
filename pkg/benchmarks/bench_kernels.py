"""Compiled versus pure-Python timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on identical inputs under both backends; the script
checks that the outputs agree and prints the median time and speed-up.
"""
import argparse
import statistics
import time

import numpy as np

from bridged.data import gen_flow_network
from bridged.kernels import get_backend
from bridged.numerics import make_rng, squared_exp_kernel


def _time(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def case_pg(backend, n=2000):
    c = np.abs(make_rng(0).normal(0.0, 2.0, n))
    return lambda: backend.pg_sample(c, make_rng(1))


def case_smo(backend, n=200):
    rng = make_rng(2)
    X = rng.standard_normal((n, 2))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(n) > 0, 1.0, -1.0)
    K = np.ascontiguousarray(squared_exp_kernel(X, tau=1.0, b=1.0))

    def run():
        alpha = np.zeros(n)
        backend.smo_solve(K, y, 1.0, alpha, 1e-8, 100000)
        return alpha
    return run


def case_flow(backend, nodes=40):
    net = gen_flow_network(nodes, seed=3, n_rep=1).net
    tail = np.ascontiguousarray(net.tail, dtype=np.int64)
    head = np.ascontiguousarray(net.head, dtype=np.int64)
    cap = np.ascontiguousarray(net.capacity, dtype=np.float64)
    return lambda: backend.max_flow(nodes, tail, head, cap, 0, nodes - 1, 1e-12)[1]


CASES = {"pg_sample (n=2000)": case_pg, "smo_solve (n=200)": case_smo,
         "max_flow (40 nodes)": case_flow}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    py, cy = get_backend("python"), get_backend("cython")
    print(f"{'kernel':<22}{'python (s)':>12}{'cython (s)':>12}{'speed-up':>10}  agree")
    for name, case in CASES.items():
        tp, op = _time(case(py), args.repeat)
        tc, oc = _time(case(cy), args.repeat)
        if name.startswith("pg_sample"):
            agree = abs(np.mean(op) - np.mean(oc)) < 0.05 * np.mean(op)
        else:
            agree = np.allclose(op, oc, rtol=1e-6, atol=1e-8)
        print(f"{name:<22}{tp:>12.4f}{tc:>12.4f}{tp / tc:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
