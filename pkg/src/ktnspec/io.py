"""Catalogue parsing and result exports.

Two catalogue layouts are read:

native
    minima ``index V log_prod_freq order``, saddles
    ``V log_prod_freq order min1 min2``. Blank lines and ``#`` comments are
    skipped.
pathsample
    minima ``V log_prod_freq order [inertia...]`` (id = 1-based line
    number), saddles ``V log_prod_freq order min1 min2 [inertia...]``.

``log_prod_freq`` is the log of the product of the vibrational frequencies;
the mean frequency is recovered as ``exp(lpf / kappa)`` for minima and
``exp(lpf / (kappa - 1))`` for saddles.

Exports are whitespace-delimited tables preceded by ``#`` header lines
(tool version, input hashes, JSON parameters). Floats are written with
``repr`` so that reading a table back is bit-exact.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np

from .errors import DomainError, ParseError, StructuralError
from .network import Network, network_from_arrays

FORMATS = ("native", "pathsample")


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # running from a source tree
        return "0+unknown"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- catalogue

@dataclass(frozen=True, eq=False)
class Catalog:
    """Raw catalogue columns as read from disk (ids are catalogue ids)."""

    min_id: np.ndarray
    min_V: np.ndarray
    min_lpf: np.ndarray
    min_order: np.ndarray
    ts_V: np.ndarray
    ts_lpf: np.ndarray
    ts_order: np.ndarray
    ts_min1: np.ndarray
    ts_min2: np.ndarray
    kappa: int
    fmt: str = "native"
    sources: dict = field(default_factory=dict)

    def network(self) -> Network:
        k = self.kappa
        if k < 2:
            raise DomainError("kappa must be at least 2 to recover saddle frequencies")
        return network_from_arrays(self.min_id, self.min_V, self.min_order, self.min_lpf / k,
                                   self.ts_min1, self.ts_min2, self.ts_V, self.ts_order,
                                   self.ts_lpf / (k - 1), k)


def _float(tok: str, path, line: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"cannot read {what} from {tok!r}", path, line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} is not finite", path, line)
    return v


def _int(tok: str, path, line: int, what: str) -> int:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"cannot read {what} from {tok!r}", path, line) from None
    if not v.is_integer():
        raise ParseError(f"{what} must be an integer, got {tok!r}", path, line)
    return int(v)


def _order(tok: str, path, line: int) -> int:
    o = _int(tok, path, line, "point group order")
    if o < 1:
        raise ParseError(f"point group order must be positive, got {o}", path, line)
    return o


def _lines(path, fmt: str):
    with open(path) as fh:
        for no, raw in enumerate(fh, start=1):
            s = raw.split("#", 1)[0].strip() if fmt == "native" else raw.strip()
            if s:
                yield no, s.split()


def _read_minima(path, fmt: str):
    ids, V, lpf, order = [], [], [], []
    for count, (no, tok) in enumerate(_lines(path, fmt), start=1):
        if fmt == "native":
            if len(tok) != 4:
                raise ParseError(f"expected 4 columns, found {len(tok)}", path, no)
            ids.append(_int(tok[0], path, no, "minimum index"))
            tok = tok[1:]
        else:
            if len(tok) < 3:
                raise ParseError(f"expected at least 3 columns, found {len(tok)}", path, no)
            ids.append(count)
        V.append(_float(tok[0], path, no, "potential"))
        lpf.append(_float(tok[1], path, no, "log frequency product"))
        order.append(_order(tok[2], path, no))
    return ids, V, lpf, order


def _read_saddles(path, fmt: str):
    V, lpf, order, m1, m2 = [], [], [], [], []
    for no, tok in _lines(path, fmt):
        if (fmt == "native" and len(tok) != 5) or len(tok) < 5:
            raise ParseError(f"expected 5 columns, found {len(tok)}", path, no)
        V.append(_float(tok[0], path, no, "potential"))
        lpf.append(_float(tok[1], path, no, "log frequency product"))
        order.append(_order(tok[2], path, no))
        a = _int(tok[3], path, no, "first minimum")
        b = _int(tok[4], path, no, "second minimum")
        if a < 1 or b < 1:
            raise ParseError("minimum ids are 1-based positive integers", path, no)
        if a == b:
            raise ParseError(f"saddle joins minimum {a} to itself", path, no)
        m1.append(a)
        m2.append(b)
    return V, lpf, order, m1, m2


def read_catalog(min_path, ts_path, kappa: int, fmt: str = "native",
                 expected_minima: int | None = None,
                 expected_saddles: int | None = None) -> Catalog:
    """Read both catalogue files; counts are checked when ``expected_*`` are given."""
    if fmt not in FORMATS:
        raise DomainError(f"unknown catalogue format {fmt!r}; choose one of {FORMATS}")
    if int(kappa) != kappa or kappa < 2:
        raise DomainError("kappa must be an integer >= 2")
    ids, V, lpf, order = _read_minima(min_path, fmt)
    sV, slpf, sorder, m1, m2 = _read_saddles(ts_path, fmt)
    if expected_minima is not None and len(ids) != expected_minima:
        raise ParseError(f"read {len(ids)} minima, expected {expected_minima}", min_path)
    if expected_saddles is not None and len(sV) != expected_saddles:
        raise ParseError(f"read {len(sV)} transition states, expected {expected_saddles}",
                         ts_path)
    known = set(ids)
    for no, (a, b) in enumerate(zip(m1, m2), start=1):
        if a not in known or b not in known:
            raise StructuralError(f"{ts_path}: transition state {no} references unknown "
                                  f"minimum {a if a not in known else b}")
    i64 = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    f64 = lambda x: np.asarray(x, dtype=float)  # noqa: E731
    srcs = {os.fspath(p): sha256_file(p) for p in (min_path, ts_path)}
    return Catalog(i64(ids), f64(V), f64(lpf), i64(order), f64(sV), f64(slpf), i64(sorder),
                   i64(m1), i64(m2), int(kappa), fmt, srcs)


def parse_catalog(min_path, ts_path, kappa: int, fmt: str = "native", **kw) -> Network:
    """Network straight from catalogue files (see :func:`read_catalog`)."""
    return read_catalog(min_path, ts_path, kappa, fmt, **kw).network()


def catalog_from_network(net: Network) -> Catalog:
    """Catalogue columns of a network (log-products rebuilt from mean frequencies)."""
    k = net.kappa
    ids = net.ids
    return Catalog(ids.copy(), net.V.copy(), k * net.log_nu, net.order.astype(np.int64),
                   net.edge_V.copy(), (k - 1) * net.edge_log_nu,
                   net.edge_order.astype(np.int64), ids[net.edge_i], ids[net.edge_j], k)


def write_catalog(cat: Catalog | Network, min_path, ts_path, fmt: str | None = None):
    """Write catalogue files; ``fmt`` defaults to the catalogue's own format."""
    if isinstance(cat, Network):
        cat = catalog_from_network(cat)
    fmt = fmt or cat.fmt
    if fmt not in FORMATS:
        raise DomainError(f"unknown catalogue format {fmt!r}")
    with open(min_path, "w") as fh:
        for a, v, l, o in zip(cat.min_id, cat.min_V, cat.min_lpf, cat.min_order):
            head = f"{a} " if fmt == "native" else ""
            fh.write(f"{head}{float(v)!r} {float(l)!r} {int(o)}\n")
    with open(ts_path, "w") as fh:
        for v, l, o, a, b in zip(cat.ts_V, cat.ts_lpf, cat.ts_order, cat.ts_min1, cat.ts_min2):
            fh.write(f"{float(v)!r} {float(l)!r} {int(o)} {int(a)} {int(b)}\n")


# ------------------------------------------------------------------ exports

def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def header_lines(kind: str, params: dict | None = None, inputs: dict | None = None) -> list[str]:
    """Reproducibility header: tool version, input hashes and parameters."""
    return [f"# ktnspec {tool_version()} {kind}",
            "# inputs " + json.dumps(inputs or {}, sort_keys=True),
            "# params " + json.dumps(params or {}, sort_keys=True, default=_json_default)]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, kind: str, columns: list[str], rows, params=None, inputs=None):
    """Header plus a column-name line plus one row per record."""
    with open(path, "w") as fh:
        for h in header_lines(kind, params, inputs):
            fh.write(h + "\n")
        fh.write("# " + " ".join(columns) + "\n")
        for r in rows:
            fh.write(" ".join(_fmt(v) for v in r) + "\n")


@dataclass(frozen=True)
class Table:
    kind: str
    version: str
    inputs: dict
    params: dict
    columns: list
    rows: list

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _token(s: str):
    try:
        return int(s)
    except ValueError:
        return float(s)


def read_table(path) -> Table:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 4 or not lines[0].startswith("# ktnspec "):
        raise ParseError("not a ktnspec export", path, 1)
    _, _, version, kind = lines[0].split(" ", 3)
    inputs = json.loads(lines[1].split(" ", 2)[2])
    params = json.loads(lines[2].split(" ", 2)[2])
    columns = lines[3][2:].split()
    rows = []
    for no, line in enumerate(lines[4:], start=5):
        tok = line.split()
        if len(tok) != len(columns):
            raise ParseError(f"expected {len(columns)} columns", path, no)
        try:
            rows.append([_token(t) for t in tok])
        except ValueError:
            raise ParseError(f"malformed value in {line!r}", path, no) from None
    return Table(kind, version, inputs, params, columns, rows)


def export_curve(path, curve, params=None, inputs=None):
    """Eigenpair curve: T lam log_lam residual iterations converged validated overlap.

    ``log_lam`` keeps rates below the double range (extended-precision records).
    """
    rows = [(r.T, float(r.lam), float(np.log(r.lam)) if r.lam > 0 else -math.inf,
             r.residual, r.iterations, r.converged, r.validated, r.overlap)
            for r in curve.records]
    p = {"k": curve.k, "sink_index": curve.sink, "diagnostic": curve.diagnostic, **(params or {})}
    write_table(path, "curve", ["T", "lam", "log_lam", "residual", "iterations", "converged",
                                "validated", "overlap"], rows, p, inputs)


def export_spectrum(path, spectrum, net: Network, params=None, inputs=None):
    """Asymptotic spectrum: k sink p q delta |S| |C| (catalogue ids)."""
    ids = net.ids
    rows = [(a.k, ids[a.sink], ids[a.p], ids[a.q], a.delta, len(a.S), len(a.C))
            for a in spectrum]
    write_table(path, "asymptotics", ["k", "sink", "p", "q", "delta", "size_S", "size_C"],
                rows, params, inputs)


def export_current(path, field, arrow_threshold: float = 0.05, params=None, inputs=None):
    """Edge currents oriented in the flow direction, with widths and shares.

    ``width`` is |F| / max |F|, ``share`` is |F| / sum |F|; ``arrow`` marks
    edges whose width reaches ``arrow_threshold``.
    """
    net = field.network
    F = np.asarray(field.F, float)
    mag = np.abs(F)
    top = mag.max() if len(mag) else 0.0
    tot = mag.sum()
    order = np.lexsort((np.arange(len(F)), -mag))
    rows = []
    for e in order:
        a, b = (net.edge_i[e], net.edge_j[e]) if F[e] >= 0 else (net.edge_j[e], net.edge_i[e])
        w = mag[e] / top if top > 0 else 0.0
        rows.append((net.ids[a], net.ids[b], mag[e], w, mag[e] / tot if tot > 0 else 0.0,
                     w >= arrow_threshold))
    p = {"label": field.label, "T": field.T, "t": field.t, "arrow_threshold": arrow_threshold,
         **(params or {})}
    write_table(path, "current", ["from", "to", "current", "width", "share", "arrow"],
                rows, p, inputs)


def export_cut(path, cut, net: Network, params=None, inputs=None):
    """Cut edges (S' side first) sorted by current, with shares and CDF points."""
    from .currents import cut_current_distribution

    dist = cut_current_distribution(cut)
    rows = []
    for e, c, s, f in zip(dist.edges, dist.currents, dist.shares, dist.cdf):
        a, b = net.edge_i[e], net.edge_j[e]
        if not cut.inside[a]:
            a, b = b, a
        rows.append((net.ids[a], net.ids[b], c, s, f))
    p = {"flux": float(cut.flux), **(params or {})}
    write_table(path, "cut", ["inside", "outside", "current", "share", "cdf"], rows, p, inputs)


def export_committor(path, cf, params=None, inputs=None):
    net = cf.generator.network
    rows = [(net.ids[i], cf.q[i], cf.undetermined[i]) for i in range(net.n_states)]
    p = {"T": cf.generator.T, "A": net.ids[cf.A], "B": net.ids[cf.B],
         "residual": cf.residual, "iterations": cf.iterations, **(params or {})}
    write_table(path, "committor", ["state", "q", "undetermined"], rows, p, inputs)


def export_evolution(path, net: Network, times, P, params=None, inputs=None):
    """Rows are states, columns the distribution at each time."""
    cols = ["state"] + [f"p{k}" for k in range(len(times))]
    rows = [[net.ids[i], *P[:, i]] for i in range(net.n_states)]
    write_table(path, "evolution", cols, rows, {"times": list(map(float, times)),
                                                 **(params or {})}, inputs)


def write_json(path, kind: str, payload: dict, params=None, inputs=None):
    doc = {"tool": "ktnspec", "version": tool_version(), "kind": kind,
           "inputs": inputs or {}, "params": params or {}, "data": payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")
