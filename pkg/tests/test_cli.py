"""Command-line interface, driven through ``main(argv)``."""
import json
import subprocess
import sys

import numpy as np
import pytest

from ktnspec import cli, io, mst, spectral, synthetic, tpt, units
from ktnspec.rates import generator


@pytest.fixture
def catalog(tmp_path):
    net = synthetic.random_network(30, np.random.default_rng(5))
    io.write_catalog(net, tmp_path / "min.in", tmp_path / "ts.in", fmt="native")
    return net, tmp_path


def run(capsys, catalog, *args):
    net, d = catalog
    argv = [args[0], "--min", str(d / "min.in"), "--ts", str(d / "ts.in"), "--kappa",
            str(net.kappa), "--out", str(d / "out"), *args[1:]]
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out.strip() else None), err


def test_asymptotics(capsys, catalog):
    net, d = catalog
    code, summary, _ = run(capsys, catalog, "asymptotics", "--K", "5")
    assert code == 0
    ref = mst.asymptotic_spectrum(net, 5)
    assert summary["deltas"] == ref.deltas.tolist()
    t = io.read_table(d / "out" / "asymptotics.dat")
    assert t.column("k") == [1, 2, 3, 4, 5]
    assert list(t.inputs.values()) == [io.sha256_file(d / "min.in"), io.sha256_file(d / "ts.in")]
    assert t.params["K"] == 5


def test_continue_matches_library(capsys, catalog):
    net, d = catalog
    code, summary, _ = run(capsys, catalog, "continue", "--ks", "1,3", "--tmin", "0.05",
                           "--tmax", "0.2", "--tsteps", "7")
    assert code == 0
    assert set(summary) == {"1", "3"}
    dense = spectral.dense_spectrum(generator(net, 0.2)).lam
    for k in (1, 3):
        t = io.read_table(d / "out" / f"curve_k{k}.dat")
        assert t.column("T")[-1] == pytest.approx(0.2)
        # curves follow their pair through crossings, so compare with the whole spectrum
        lam = t.column("lam")[-1]
        assert np.min(np.abs(dense - lam)) <= 1e-8 * lam
        assert summary[str(k)]["delta_fit"] > 0


def test_continue_by_sink(capsys, catalog):
    net, _ = catalog
    sp = mst.asymptotic_spectrum(net, 2)
    sink = int(net.ids[sp[1].sink])
    code, summary, _ = run(capsys, catalog, "continue", "--sink", str(sink), "--tmin", "0.1",
                           "--tmax", "0.2", "--tsteps", "3")
    assert code == 0
    assert summary["2"]["sink"] == sink


def test_current(capsys, catalog):
    net, d = catalog
    code, summary, _ = run(capsys, catalog, "current", "--k", "2", "--temp", "0.2")
    assert code == 0
    dense = spectral.dense_spectrum(generator(net, 0.2)).lam
    assert np.min(np.abs(dense - summary["lam"])) <= 1e-8 * summary["lam"]
    assert summary["node_balance"] <= 1e-10
    assert summary["cut_flux"] > 0
    assert (d / "out" / "current_k2.dat").exists()
    cut = io.read_table(d / "out" / "cut_k2.dat")
    assert cut.column("cdf")[-1] == pytest.approx(1.0)


def test_committor(capsys, catalog):
    net, d = catalog
    a, b = int(net.ids[0]), int(net.ids[-1])
    code, summary, _ = run(capsys, catalog, "committor", "--A", str(a), "--B", str(b),
                           "--temp", "0.2", "--levels", "0.25,0.5")
    assert code == 0
    gen = generator(net, 0.2)
    q = tpt.committor_dense(gen, [0], [net.n_states - 1])
    t = io.read_table(d / "out" / "committor.dat")
    np.testing.assert_allclose(t.column("q"), q, atol=1e-9)
    assert summary["nu_R"][0] == pytest.approx(summary["nu_R"][1], rel=1e-8)


def test_evolve(capsys, catalog):
    net, d = catalog
    (d / "p0").write_text(f"{int(net.ids[3])} 1.0\n")
    code, summary, _ = run(capsys, catalog, "evolve", "--p0", str(d / "p0"), "--times",
                           "0,1,100", "--temp", "0.3")
    assert code == 0
    t = io.read_table(d / "out" / "evolution.dat")
    assert t.column("p0")[3] == pytest.approx(1.0, abs=1e-12)
    for c in ("p1", "p2"):
        assert sum(t.column(c)) == pytest.approx(1.0, abs=1e-12)


def test_dgraph_and_validate(capsys, catalog):
    _, d = catalog
    code, summary, _ = run(capsys, catalog, "dgraph", "--top-n", "10", "--threshold", "0.1",
                           "--color-k", "1", "--temp", "0.2")
    assert code == 0 and summary["groups"] >= 1
    doc = json.loads((d / "out" / "dgraph.json").read_text())
    assert doc["data"]["n_groups"] == summary["groups"]
    code, summary, _ = run(capsys, catalog, "validate", "--temps", "0.1")
    assert code == 0
    assert summary["connected"] and summary["generator"]["0.1"]["row_sum"] < 1e-12


def test_component_and_cap(capsys, catalog):
    net, d = catalog
    code, summary, _ = run(capsys, catalog, "component")
    assert code == 0 and summary["component_states"] == net.n_states
    vmax = float(np.median(net.edge_V))
    code, summary, _ = run(capsys, catalog, "cap", "--vmax", repr(vmax))
    assert code == 0
    capped = io.parse_catalog(d / "out" / "min.data", d / "out" / "ts.data", net.kappa)
    assert capped.n_states == summary["states"] < net.n_states
    assert capped.edge_V.max() <= vmax


def test_exit_codes(capsys, catalog, tmp_path):
    net, d = catalog
    # domain
    assert run(capsys, catalog, "cap", "--vmax", "-100")[0] == 1
    assert run(capsys, catalog, "continue", "--k", "1", "--tmin", "0.2", "--tmax", "0.1",
               "--tsteps", "3")[0] == 1
    assert run(capsys, catalog, "committor", "--A", "1", "--B", "2", "--temp", "-1")[0] == 1
    # structural / parse / IO
    assert cli.main(["asymptotics", "--min", str(tmp_path / "nope"), "--ts", "x", "--kappa",
                     "3"]) == 2
    (d / "bad.min").write_text("1 0.0 0.0 -1\n")
    assert cli.main(["asymptotics", "--min", str(d / "bad.min"), "--ts", str(d / "ts.in"),
                     "--kappa", "3"]) == 2
    assert "bad.min:1" in capsys.readouterr().err
    assert run(capsys, catalog, "committor", "--A", "1", "--B", "1", "--temp", "0.1")[0] == 1
    assert run(capsys, catalog, "committor", "--A", "999", "--B", "1", "--temp", "0.1")[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["continue"])
    assert info.value.code == 2
    # convergence
    assert run(capsys, catalog, "committor", "--A", "1", "--B", str(int(net.ids[-1])),
               "--temp", "0.05", "--tol", "1e-40")[0] == 3
    assert run(capsys, catalog, "continue", "--k", "2", "--tmin", "0.05", "--tmax", "0.2",
               "--tsteps", "4", "--tol", "1e-40", "--strict")[0] == 3


def test_convert(tmp_path, capsys):
    src = tmp_path / "rates.txt"
    src.write_text("# T r\n0.10 4.3e-11\n0.18 1.1e-3\n")
    out = tmp_path / "si.txt"
    assert cli.main(["convert", "--epsilon", "119.8", "--sigma", "3.405", "--mass", "39.948",
                     "--input", str(src), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "# T_reduced T_K rate_reduced rate_per_s"
    rows = [list(map(float, ln.split())) for ln in lines[2:]]
    assert rows[0][1] == pytest.approx(11.98, rel=1e-12)
    assert rows[0][3] == pytest.approx(4.3e-11 / units.ARGON.tau, rel=1e-12)
    assert units.round_sig(rows[0][3]) == 2.0e1
    # SI constants give the same result
    u = units.ARGON
    assert cli.main(["convert", "--si", "--epsilon", repr(u.epsilon), "--sigma", repr(u.sigma),
                     "--mass", repr(u.mass), "--input", str(src)]) == 0
    si_rows = [list(map(float, ln.split())) for ln in capsys.readouterr().out.splitlines()[2:]]
    np.testing.assert_allclose(si_rows, rows, rtol=1e-14)
    src.write_text("0.1\n")
    assert cli.main(["convert", "--epsilon", "1", "--sigma", "1", "--mass", "1",
                     "--input", str(src)]) == 2
    assert cli.main(["convert", "--epsilon", "0", "--sigma", "1", "--mass", "1",
                     "--input", str(src)]) == 1


def test_console_script(catalog):
    net, d = catalog
    r = subprocess.run([sys.executable, "-m", "ktnspec.cli", "asymptotics", "--min",
                        str(d / "min.in"), "--ts", str(d / "ts.in"), "--kappa", "3", "--K", "2",
                        "--out", str(d / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["K"] == 2
