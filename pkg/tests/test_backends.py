"""The numba and numpy kernel backends agree.

The backend is fixed at import time, so each one runs in a fresh interpreter.
"""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

WORKER = r"""
import json
import numpy as np
from ktnspec import BACKEND, mst, spectral, synthetic, tpt
from ktnspec.rates import generator

net = synthetic.random_network(80, np.random.default_rng(3))
gen = generator(net, 0.1)
sp = mst.asymptotic_spectrum(net, 6)
dense = spectral.dense_spectrum(gen)
curves = spectral.continue_spectrum(net, list(sp), [0.05, 0.075, 0.1])
cf = tpt.committor(gen, [0], [net.n_states - 1])
tree = mst.minimum_spanning_tree(net)
print(json.dumps({
    "backend": BACKEND,
    "deltas": sp.deltas.tolist(),
    "sinks": [int(p.sink) for p in sp],
    "tree_edges": sorted(int(e) for e in tree.edges),
    "dense": dense.lam[:8].tolist(),
    "rqi": [float(c.records[-1].lam) for c in curves],
    "q": cf.q.tolist(),
}))
"""


def _run(backend):
    env = dict(os.environ, KTNSPEC_BACKEND=backend)
    r = subprocess.run([sys.executable, "-c", WORKER], env=env, capture_output=True, text=True,
                       timeout=600)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout.splitlines()[-1])


@pytest.fixture(scope="module")
def results():
    pytest.importorskip("numba")
    return _run("numba"), _run("numpy")


def test_backend_flag(results):
    fast, slow = results
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"


def test_combinatorial_outputs_identical(results):
    fast, slow = results
    for key in ("deltas", "sinks", "tree_edges"):
        assert fast[key] == slow[key], key


@pytest.mark.parametrize("key, rtol", [("dense", 1e-10), ("rqi", 1e-10), ("q", 1e-9)])
def test_numeric_outputs_agree(results, key, rtol):
    fast, slow = results
    np.testing.assert_allclose(fast[key], slow[key], rtol=rtol, atol=1e-12 if key == "q" else 0)


def test_bad_backend_name():
    env = dict(os.environ, KTNSPEC_BACKEND="fortran")
    r = subprocess.run([sys.executable, "-c", "import ktnspec"], env=env, capture_output=True,
                       text=True)
    assert r.returncode != 0
    assert "KTNSPEC_BACKEND" in r.stderr
