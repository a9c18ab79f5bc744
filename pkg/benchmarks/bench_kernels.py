"""Compare the numba and numpy kernel backends.

Each backend runs in its own interpreter (the backend is fixed at import
time through ``KTNSPEC_BACKEND``). Usage::

    python3 benchmarks/bench_kernels.py [--n 2000] [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from ktnspec import synthetic, generator, spectral, mst, elimination, tpt, BACKEND

n, repeat = int(sys.argv[1]), int(sys.argv[2])
net = synthetic.random_network(n, np.random.default_rng(0))
gen = generator(net, 0.1)
pat = elimination.network_pattern(net)
op = spectral.Operator(gen)
b = np.random.default_rng(1).standard_normal(n)
dense_n = min(n, 300)
small = synthetic.random_network(dense_n, np.random.default_rng(2))
sgen = generator(small, 0.1)
W = np.zeros((dense_n, dense_n))
W[small.edge_i, small.edge_j] = sgen.weight
W[small.edge_j, small.edge_i] = sgen.weight

def best(fn):
    fn()  # warm-up, includes compilation
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); t.append(time.perf_counter() - t0)
    return min(t)

out = {"backend": BACKEND, "n": n}
out["mst_kruskal"] = best(lambda: mst.minimum_spanning_tree(net))
out["asymptotic_spectrum_K50"] = best(lambda: mst.asymptotic_spectrum(net, 50))
out["shifted_ldl"] = best(lambda: elimination.factor_shifted(pat, op.weight, op.pi * 1e-6))
fac = elimination.factor_shifted(pat, op.weight, op.pi * 1e-6)
out["ldl_solve"] = best(lambda: fac.solve(b))
out["gth_dense_%d" % dense_n] = best(lambda: spectral.gth_factor(sgen.pi, W))
out["committor_cg"] = best(lambda: tpt.committor(gen, [0], [n - 1]))
print(json.dumps(out))
"""

def run(backend: str, n: int, repeat: int) -> dict:
    env = dict(os.environ, KTNSPEC_BACKEND=backend)
    res = subprocess.run([sys.executable, "-c", WORKER, str(n), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    numba_res = run("numba", a.n, a.repeat)
    numpy_res = run("numpy", a.n, a.repeat)
    keys = [k for k in numba_res if k not in ("backend", "n")]
    print(f"{'kernel':28s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speed-up':>9s}")
    for k in keys:
        x, y = numba_res[k], numpy_res[k]
        print(f"{k:28s} {x:12.5f} {y:12.5f} {y / x:9.1f}")
    if numba_res["backend"] != "numba":
        print("note: numba is not importable; both columns used the numpy kernels")


if __name__ == "__main__":
    main()
