"""Compare the numba and pure-numpy kernel backends.

Times each kernel on the same inputs with both implementations and checks
that they agree. The end-to-end row runs a short composite exploration in a
subprocess per backend, selected through ``GGMCOMPOSITE_NUMBA``.

    python benchmarks/bench_backends.py --p 30 --repeats 5
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from ggmcomposite import kernels
from ggmcomposite.gauss import empirical_covariance
from ggmcomposite.graphs import Graph
from ggmcomposite.simulate import GraphModelSpec, make_experiment

E2E_SNIPPET = """
import json, time
from ggmcomposite import SplitConfig, backend_name, make_experiment, run_composite, GraphModelSpec
spec = GraphModelSpec.preset({p}, "sparse", seed=1)
_, _, data = make_experiment(spec, {n}, 2)
run_composite(data, split=SplitConfig(seed=0), steps=2)  # compile / warm caches
t0 = time.perf_counter()
tr = run_composite(data, split=SplitConfig(seed=0), steps={steps})
ms = 1000 * (time.perf_counter() - t0)
print(json.dumps({{"backend": backend_name(), "ms": ms, "edges": len(tr.graphs[-1])}}))
"""


def best_of(fn, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(1000.0 * (time.perf_counter() - t0))
    return min(times), out


def kernel_cases(p, n, seed):
    _, _, data = make_experiment(GraphModelSpec.preset(p, "medium", seed=seed), n, seed + 1)
    S = empirical_covariance(data).ridged(1e-6)
    rng = np.random.default_rng(seed)
    g = Graph.from_adjacency(np.triu(rng.random((p, p)) < 3.0 / p, k=1))
    adj = g.adjacency()
    rho = 0.1 * float(np.max(np.abs(S - np.diag(np.diag(S)))))
    Q = S[1:, 1:].copy()
    c = S[1:, 0].copy()

    def ips(fn):
        return lambda: fn(S, adj, S.copy(), 1e-8, 500)[0]

    def glasso(fn):
        return lambda: fn(S, rho, S.copy(), np.zeros_like(S), 1e-5, 200, 1e-8, 1000)[0]

    def lasso(fn):
        def run():
            beta = np.zeros(p - 1)
            fn(Q, c, rho, beta, 1e-10, 10000)
            return beta
        return run

    return [
        ("ips_fit", ips(kernels.ips_fit_numba), ips(kernels.ips_fit_numpy)),
        ("glasso_bcd", glasso(kernels.glasso_bcd_numba), glasso(kernels.glasso_bcd_numpy)),
        ("lasso_cd", lasso(kernels.lasso_cd_numba), lasso(kernels.lasso_cd_numpy)),
    ]


def end_to_end(p, n, steps):
    rows = {}
    for flag in ("1", "0"):
        env = dict(os.environ, GGMCOMPOSITE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(p=p, n=n, steps=steps)],
                             env=env, capture_output=True, text=True, check=True)
        out = json.loads(res.stdout.strip().splitlines()[-1])
        rows[out["backend"]] = out
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=30)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--steps", type=int, default=20, help="composite steps for the end-to-end row")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)

    print(f"{'kernel':<12} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max diff':>10}")
    for name, fast, slow in kernel_cases(args.p, args.n, args.seed):
        fast()  # JIT compile outside the timing
        t_fast, a = best_of(fast, args.repeats)
        t_slow, b = best_of(slow, args.repeats)
        diff = float(np.max(np.abs(a - b)))
        print(f"{name:<12} {t_fast:>10.3f} {t_slow:>10.3f} {t_slow / t_fast:>8.1f} {diff:>10.2e}")
    if not args.skip_e2e:
        rows = end_to_end(args.p, args.n, args.steps)
        fast, slow = rows["numba"], rows["numpy"]
        print(f"{'composite':<12} {fast['ms']:>10.1f} {slow['ms']:>10.1f} {slow['ms'] / fast['ms']:>8.1f} "
              f"{'same' if fast['edges'] == slow['edges'] else 'DIFFERS':>10}")


if __name__ == "__main__":
    main()
