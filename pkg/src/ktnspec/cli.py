"""Command-line interface.

Every subcommand reads a catalogue (``--min``/``--ts``), writes its tables
into ``--out`` and prints a JSON summary on stdout. Exit codes: 0 success,
1 domain error, 2 parse/structural error (including I/O), 3 convergence
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import currents, dgraph, io, mst, network, spectral, tpt, units
from .errors import ConvergenceError, DomainError, KTNError, ParseError, StructuralError
from .rates import generator

log = logging.getLogger("ktnspec")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated integers, got {text!r}") from None


class _Context:
    def __init__(self, args):
        self.args = args
        self.catalog = io.read_catalog(args.min, args.ts, args.kappa, args.format)
        net = self.catalog.network()
        if args.lcc:
            net = network.largest_connected_component(net)
        self.net = net
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)

    @property
    def inputs(self) -> dict:
        return self.catalog.sources

    def params(self, **extra) -> dict:
        a = self.args
        return {"command": a.command, "kappa": a.kappa, "format": a.format, "lcc": a.lcc,
                **extra}

    def path(self, name: str) -> str:
        return os.path.join(self.out, name)

    def state(self, ext_id: int) -> int:
        return self.net.index_of(ext_id)

    def states(self, ext_ids) -> np.ndarray:
        return np.asarray(self.net.indices_of(ext_ids), dtype=np.int64)

    def require_connected(self):
        if not self.net.is_connected():
            raise StructuralError("network is disconnected; pass --lcc to use its largest "
                                  "connected component")


def _spectrum(ctx: _Context, K: int):
    ctx.require_connected()
    return mst.asymptotic_spectrum(ctx.net, K)


def _pairs_for(ctx: _Context, a) -> list:
    """Asymptotic pairs named by --k/--ks/--sink, with the ranks below them."""
    ks = []
    if getattr(a, "ks", None):
        ks = _ints(a.ks)
    elif getattr(a, "k", None) is not None:
        ks = [a.k]
    if getattr(a, "sink", None) is not None:
        sp_all = _spectrum(ctx, ctx.net.n_states - 1)
        ks = [sp_all.by_sink(ctx.state(a.sink)).k]
        return sp_all, ks
    if not ks:
        raise DomainError("name an eigenpair with --k, --ks or --sink")
    return _spectrum(ctx, max(ks)), ks


def _continue(ctx: _Context, spectrum, ks, schedule, args):
    """Continue ranks 1..max(ks) so that each rank can deflate the lower ones."""
    wanted = [p for p in spectrum if p.k <= max(ks)]
    curves = spectral.continue_spectrum(ctx.net, wanted, schedule, tol=args.tol,
                                        strict=False)
    return {c.k: c for c in curves}


def cmd_component(ctx: _Context, a):
    lcc = network.largest_connected_component(ctx.net)
    io.write_catalog(lcc, ctx.path("min.data"), ctx.path("ts.data"), a.format)
    return {"states": ctx.net.n_states, "edges": ctx.net.n_edges,
            "component_states": lcc.n_states, "component_edges": lcc.n_edges}


def cmd_cap(ctx: _Context, a):
    ref = None if a.ref is None else ctx.state(a.ref)
    capped = network.cap_network(ctx.net, a.vmax, ref)
    io.write_catalog(capped, ctx.path("min.data"), ctx.path("ts.data"), a.format)
    return {"states": capped.n_states, "edges": capped.n_edges, "vmax": a.vmax}


def cmd_asymptotics(ctx: _Context, a):
    sp = _spectrum(ctx, a.K)
    io.export_spectrum(ctx.path("asymptotics.dat"), sp, ctx.net, ctx.params(K=a.K), ctx.inputs)
    gen = mst.check_genericness(ctx.net, sp)
    return {"K": len(sp), "deltas": sp.deltas.tolist(), "generic": gen.is_generic,
            "harmful_ties": len(gen.harmful_ties)}


def cmd_continue(ctx: _Context, a):
    spectrum, ks = _pairs_for(ctx, a)
    if not (0 < a.tmin < a.tmax) or a.tsteps < 2:
        raise DomainError("need 0 < tmin < tmax and at least two temperature steps")
    schedule = np.linspace(a.tmin, a.tmax, a.tsteps)
    curves = _continue(ctx, spectrum, ks, schedule, a)
    fit_range = tuple(_floats(a.fit_range)) if a.fit_range else None
    summary = {}
    for k in ks:
        c = curves[k]
        name = f"curve_k{k}.dat"
        io.export_curve(ctx.path(name), c, ctx.params(tmin=a.tmin, tmax=a.tmax,
                                                      tsteps=a.tsteps), ctx.inputs)
        entry = {"sink": int(ctx.net.ids[c.sink]), "records": len(c.records),
                 "delta_asymptotic": spectrum[k - 1].delta, "diagnostic": c.diagnostic}
        if len(c.records) >= 2:
            fit = c.fit(fit_range)
            entry.update(A=fit.A, delta_fit=fit.delta)
        summary[str(k)] = entry
    if a.strict and any(curves[k].truncated for k in ks):
        raise ConvergenceError("; ".join(curves[k].diagnostic for k in ks
                                         if curves[k].truncated))
    return summary


DEFAULT_STEP = 0.01


def _pair_at(ctx: _Context, a, T: float):
    """Eigenpair rank a.k at temperature T by continuation from a.tmin.

    Defaults: start at T/10 (where the asymptotic guess is reliable) with
    steps of at most DEFAULT_STEP.
    """
    spectrum = _spectrum(ctx, a.k)
    tmin = a.tmin if a.tmin is not None else T / 10
    if not 0 < tmin <= T:
        raise DomainError("need 0 < tmin <= temp")
    steps = a.tsteps or max(8, int(np.ceil((T - tmin) / DEFAULT_STEP)) + 1)
    schedule = np.linspace(tmin, T, steps)
    curve = _continue(ctx, spectrum, [a.k], schedule, a)[a.k]
    if curve.truncated or not curve.records or curve.records[-1].T != schedule[-1]:
        raise ConvergenceError(f"eigenpair k={a.k} not reached at T={T}: {curve.diagnostic}")
    return curve.records[-1]


def cmd_current(ctx: _Context, a):
    gen = generator(ctx.net, a.temp)
    rec = spectral.refine_eigenpair(gen, _pair_at(ctx, a, a.temp))
    field = currents.eigencurrent(gen, rec, a.time, label=a.k)
    io.export_current(ctx.path(f"current_k{a.k}.dat"), field, a.arrow_threshold,
                      ctx.params(k=a.k, temp=a.temp), ctx.inputs)
    ea = currents.emission_absorption(gen, rec)
    field0 = currents.eigencurrent(gen, rec)
    cut = currents.emission_absorption_cut(gen, rec, field0)
    io.export_cut(ctx.path(f"cut_k{a.k}.dat"), cut, ctx.net, ctx.params(k=a.k, temp=a.temp),
                  ctx.inputs)
    return {"lam": float(rec.lam), "emitted": float(ea.total_emitted),
            "absorbed": float(ea.total_absorbed), "cut_flux": float(cut.flux),
            "cut_edges": len(cut), "emitters": int(ea.emitting.sum()),
            "node_balance": currents.node_balance_residual(field0, gen, rec)}


def cmd_committor(ctx: _Context, a):
    ctx.require_connected()
    gen = generator(ctx.net, a.temp)
    cf = tpt.committor(gen, ctx.states(_ints(a.A)), ctx.states(_ints(a.B)), tol=a.tol)
    levels = _floats(a.levels) if a.levels else [0.5]
    fluxes = [tpt.transition_rate(cf, lv) for lv in levels]
    kab, kba = tpt.tpt_rates(cf, fluxes[0])
    io.export_committor(ctx.path("committor.dat"), cf, ctx.params(temp=a.temp), ctx.inputs)
    for lv in levels:
        cut = tpt.isocommittor_cut(cf, lv)
        if len(cut):
            io.export_cut(ctx.path(f"isocommittor_{lv:g}.dat"), cut, ctx.net,
                          ctx.params(level=lv, temp=a.temp), ctx.inputs)
    return {"nu_R": fluxes, "levels": levels, "k_AB": kab, "k_BA": kba,
            "iterations": cf.iterations, "residual": cf.residual,
            "undetermined": int(cf.undetermined.sum())}


def _read_p0(path, net) -> np.ndarray:
    p = np.zeros(net.n_states)
    with open(path) as fh:
        for no, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].split()
            if not s:
                continue
            if len(s) != 2:
                raise ParseError("expected 'state probability'", path, no)
            try:
                p[net.index_of(int(s[0]))] = float(s[1])
            except (ValueError, StructuralError) as exc:
                raise ParseError(str(exc), path, no) from None
    return p


def cmd_evolve(ctx: _Context, a):
    ctx.require_connected()
    if ctx.net.n_states > a.dense_cap:
        raise DomainError(f"evolve uses the dense spectrum; N={ctx.net.n_states} exceeds the "
                          f"cap {a.dense_cap}")
    gen = generator(ctx.net, a.temp)
    dec = spectral.dense_spectrum(gen, cap=a.dense_cap)
    times = _floats(a.times)
    P = spectral.evolve_distribution(dec, _read_p0(a.p0, ctx.net), times)
    io.export_evolution(ctx.path("evolution.dat"), ctx.net, times, np.atleast_2d(P),
                        ctx.params(temp=a.temp), ctx.inputs)
    return {"times": times, "lam1": float(dec.lam[1]) if dec.n > 1 else 0.0}


def cmd_dgraph(ctx: _Context, a):
    ctx.require_connected()
    coloring = None
    params = ctx.params(top_n=a.top_n, threshold=a.threshold)
    if a.color_k is not None:
        if a.temp is None:
            raise DomainError("--color-k needs --temp")
        a.k = a.color_k
        coloring = _pair_at(ctx, a, a.temp).phi.astype(float)
        params.update(color_k=a.color_k, temp=a.temp)
    g = dgraph.disconnectivity_graph(ctx.net, a.top_n, a.threshold, coloring)
    io.write_json(ctx.path("dgraph.json"), "dgraph", g.to_dict(), params, ctx.inputs)
    return {"groups": len(g.groups)}


def cmd_validate(ctx: _Context, a):
    report = {"states": ctx.net.n_states, "edges": ctx.net.n_edges,
              "connected": ctx.net.is_connected(),
              "merged_duplicates": ctx.net.n_merged_duplicates,
              "clamped_saddles": len(ctx.net.clamped_edges)}
    checks = {}
    for T in _floats(a.temps):
        gen = generator(ctx.net, T)
        checks[repr(T)] = {"row_sum": gen.row_sum_residual(),
                           "detailed_balance": gen.detailed_balance_residual()}
    report["generator"] = checks
    if report["connected"] and ctx.net.n_states > 1:
        K = min(a.K, ctx.net.n_states - 1)
        g = mst.check_genericness(ctx.net, mst.asymptotic_spectrum(ctx.net, K))
        report["genericness"] = {"generic": g.is_generic,
                                 "duplicate_V": len(g.duplicate_V),
                                 "duplicate_edge_V": len(g.duplicate_edge_V),
                                 "duplicate_barriers": len(g.duplicate_barriers),
                                 "delta_ties": len(g.delta_ties),
                                 "harmful_ties": len(g.harmful_ties)}
    io.write_json(ctx.path("validate.json"), "validate", report, ctx.params(), ctx.inputs)
    return report


def cmd_convert(a):
    if a.si:
        u = units.ReducedUnits(a.epsilon, a.sigma, a.mass)
    else:
        u = units.lennard_jones_units(a.epsilon, a.sigma, a.mass)
    src = open(a.input) if a.input != "-" else sys.stdin
    rows = []
    try:
        for no, line in enumerate(src, start=1):
            s = line.split("#", 1)[0].split()
            if not s:
                continue
            if len(s) != 2:
                raise ParseError("expected 'T_reduced rate_reduced'", a.input, no)
            try:
                T, r = float(s[0]), float(s[1])
            except ValueError:
                raise ParseError(f"malformed numbers in {line.strip()!r}", a.input, no) from None
            rows.append((T, r, float(u.temperature(T)), float(u.rate(r))))
    finally:
        if src is not sys.stdin:
            src.close()
    out = sys.stdout if a.output == "-" else open(a.output, "w")
    try:
        out.write(f"# tau {float(u.tau)!r} s, T scale {float(u.temperature_scale)!r} K\n")
        out.write("# T_reduced T_K rate_reduced rate_per_s\n")
        for T, r, TK, rs in rows:
            out.write(f"{T!r} {TK!r} {r!r} {rs!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ktnspec", description="Spectral analysis of kinetic "
                                "transition networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cat(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--min", required=True, help="minima file")
        s.add_argument("--ts", required=True, help="transition-state file")
        s.add_argument("--kappa", type=int, required=True, help="vibrational degrees of freedom")
        s.add_argument("--format", choices=io.FORMATS, default="native")
        s.add_argument("--lcc", action="store_true", help="restrict to the largest component")
        s.add_argument("--out", default=".", help="output directory")
        return s

    cat("component", "write the largest connected component")
    s = cat("cap", "restrict to states reachable below an energy cap")
    s.add_argument("--vmax", type=float, required=True)
    s.add_argument("--ref", type=int, help="reference state id (default: lowest minimum)")
    s = cat("asymptotics", "zero-temperature eigenvalue asymptotics")
    s.add_argument("--K", type=int, default=None, help="number of ranks (default: all)")
    s = cat("continue", "continue eigenpairs over a temperature schedule")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--ks", help="comma-separated ranks")
    g.add_argument("--sink", type=int, help="sink state id")
    s.add_argument("--tmin", type=float, required=True)
    s.add_argument("--tmax", type=float, required=True)
    s.add_argument("--tsteps", type=int, required=True)
    s.add_argument("--fit-range", help="Tlo,Thi for the Arrhenius fit")
    s.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    s.add_argument("--strict", action="store_true", help="fail if any curve is truncated")
    for name, help_ in (("current", "eigencurrent and emission-absorption cut"),):
        s = cat(name, help_)
        s.add_argument("--k", type=int, required=True)
        s.add_argument("--temp", type=float, required=True)
        s.add_argument("--time", type=float, default=0.0)
        s.add_argument("--arrow-threshold", type=float, default=0.05)
        s.add_argument("--tmin", type=float, default=None, help="start of the continuation")
        s.add_argument("--tsteps", type=int, default=None)
        s.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    s = cat("committor", "committor, reactive flux and TPT rates")
    s.add_argument("--A", required=True, help="comma-separated state ids")
    s.add_argument("--B", required=True, help="comma-separated state ids")
    s.add_argument("--temp", type=float, required=True)
    s.add_argument("--levels", help="comma-separated isocommittor levels")
    s.add_argument("--tol", type=float, default=tpt.DEFAULT_TOL)
    s = cat("evolve", "evolve a distribution with the dense spectrum")
    s.add_argument("--p0", required=True, help="file of 'state probability' lines")
    s.add_argument("--times", required=True)
    s.add_argument("--temp", type=float, required=True)
    s.add_argument("--dense-cap", type=int, default=spectral.DENSE_CAP)
    s = cat("dgraph", "disconnectivity graph document")
    s.add_argument("--top-n", type=int, default=100)
    s.add_argument("--threshold", type=float, default=0.2)
    s.add_argument("--color-k", type=int, default=None, help="colour by eigenvector k")
    s.add_argument("--temp", type=float, default=None)
    s.add_argument("--tmin", type=float, default=None)
    s.add_argument("--tsteps", type=int, default=None)
    s.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    s = cat("validate", "generator and genericness checks")
    s.add_argument("--temps", default="0.1,0.2")
    s.add_argument("--K", type=int, default=50)

    s = sub.add_parser("convert", help="reduced units to SI")
    s.add_argument("--epsilon", type=float, required=True,
                   help="energy scale (epsilon/k_B in K, or J with --si)")
    s.add_argument("--sigma", type=float, required=True, help="length (angstrom, or m with --si)")
    s.add_argument("--mass", type=float, required=True, help="mass (u, or kg with --si)")
    s.add_argument("--si", action="store_true", help="constants are given in J, m and kg")
    s.add_argument("--input", default="-", help="table of 'T_reduced rate_reduced' lines")
    s.add_argument("--output", default="-")
    return p


COMMANDS = {"component": cmd_component, "cap": cmd_cap, "asymptotics": cmd_asymptotics,
            "continue": cmd_continue, "current": cmd_current, "committor": cmd_committor,
            "evolve": cmd_evolve, "dgraph": cmd_dgraph, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "convert":
            cmd_convert(args)
            return 0
        ctx = _Context(args)
        summary = COMMANDS[args.command](ctx, args)
    except KTNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return StructuralError.exit_code
    print(json.dumps(summary, indent=1, default=io._json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
