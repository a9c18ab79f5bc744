"""Finite-temperature eigenpairs: Rayleigh quotient iteration, continuation, dense oracle.

Conventions: ``lam`` is the decay rate, i.e. L phi = -lam phi with lam >= 0.
``psi = P^{1/2} phi`` is a unit eigenvector of the symmetrised generator,
and ``phi`` then satisfies sum_i pi_i phi_i^2 = 1.

Both the iterative and the dense solver work on the factorisation
-L_sym = P^{-1/2} Lap(w) P^{-1/2}, with w the edge conductances. Every
elimination step forms diagonals from sums of positive conductances, so
small eigenvalues keep full relative accuracy even when they sit twenty or
more orders of magnitude below the largest escape rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from . import kernels
from .elimination import factor_shifted, network_pattern
from .errors import ConvergenceError, DomainError, StructuralError
from .rates import Generator, generator
from .mst import AsymptoticEigenpair
from .network import Network

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
DENSE_CAP = 2000
VALIDATION_THRESHOLD = 0.5
# stopping also requires the Rayleigh quotient to be stationary to this level,
# since the residual test alone is blind to eigenvalues far below ||L_sym||
_RHO_STALL = 1e-13
_LOG_TINY = math.log(np.finfo(float).tiny) + 10.0


@dataclass(frozen=True, eq=False)
class EigenpairRecord:
    """One eigenpair at one temperature.

    ``residual`` is ||L_sym psi + lam psi||_2. ``validated`` is set by the
    continuation driver; bare RQI output starts unvalidated.
    """

    T: float
    lam: float
    psi: np.ndarray
    phi: np.ndarray
    residual: float
    iterations: int
    converged: bool
    validated: bool = False
    overlap: float = float("nan")
    retries: int = 0
    note: str = ""

    def with_validation(self, ok: bool, overlap: float, retries: int = 0, note: str = ""):
        return EigenpairRecord(self.T, self.lam, self.psi, self.phi, self.residual,
                               self.iterations, self.converged, bool(ok), float(overlap),
                               retries, note or self.note)


@dataclass(frozen=True)
class ArrheniusFit:
    """ln lam = ln A - delta / T over ``T_range`` (``n_points`` records)."""

    A: float
    delta: float
    T_range: tuple
    n_points: int

    def __call__(self, T):
        return self.A * np.exp(-self.delta / np.asarray(T, float))

    def __iter__(self):
        return iter((self.A, self.delta))


@dataclass(eq=False)
class EigenpairCurve:
    """Continued eigenpair of asymptotic rank ``k`` over a temperature schedule."""

    k: int
    sink: int
    records: list = field(default_factory=list)
    arrhenius: ArrheniusFit | None = None
    diagnostic: str = ""

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([r.T for r in self.records])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.records])

    @property
    def truncated(self) -> bool:
        return bool(self.diagnostic)

    def fit(self, T_range=None) -> ArrheniusFit:
        self.arrhenius = arrhenius_fit(self, T_range)
        return self.arrhenius


class Operator:
    """-L_sym in factored form, in float64 or extended precision.

    Holds pi, P^{1/2}, the edge conductances and the symmetrised off-diagonal
    rates in the working dtype. The extended variant is used when some
    Boltzmann factor or the sought eigenvalue leaves double-precision range.
    """

    def __init__(self, gen: Generator, extended: bool = False):
        self.gen = gen
        self.network = gen.network
        self.T = gen.T
        self.n = gen.n
        self.extended = bool(extended)
        self.norm_inf = gen.lsym_norm_inf
        if not extended:
            self.dtype = np.float64
            self.pi, self.sqrt_pi, self.weight = gen.pi, gen.sqrt_pi, gen.weight
            return
        ld = self.dtype = np.longdouble
        net = gen.network
        self.pi = np.exp(gen.log_pi.astype(ld))
        self.sqrt_pi = np.exp(0.5 * gen.log_pi.astype(ld))
        self.weight = np.exp(gen.log_weight.astype(ld))
        fwd, bwd = gen.log_rate_fwd.astype(ld), gen.log_rate_bwd.astype(ld)
        self._off = np.exp(0.5 * (fwd + bwd))
        esc = np.zeros(self.n, ld)
        np.add.at(esc, net.edge_i, np.exp(fwd))
        np.add.at(esc, net.edge_j, np.exp(bwd))
        self._esc = esc

    def apply(self, x):
        """L_sym @ x."""
        if not self.extended:
            return self.gen.L_sym @ x
        net = self.network
        y = -self._esc * x
        np.add.at(y, net.edge_i, self._off * x[net.edge_j])
        np.add.at(y, net.edge_j, self._off * x[net.edge_i])
        return y

    def scalar(self, v):
        return self.dtype(v)


EXTENDED_AVAILABLE = np.finfo(np.longdouble).minexp < np.finfo(np.float64).minexp
_LOG_TINY_EXT = float(np.log(np.finfo(np.longdouble).tiny)) + 10.0


def needs_extended(gen: Generator, log_lam_hint: float | None = None) -> bool:
    """True when a Boltzmann factor (or the expected eigenvalue) underflows float64."""
    lo = min(gen.log_pi.min(), gen.log_weight.min(),
             gen.log_rate_fwd.min(initial=0.0), gen.log_rate_bwd.min(initial=0.0))
    if log_lam_hint is not None:
        lo = min(lo, log_lam_hint)
    return bool(lo < _LOG_TINY)


def _norm(x):
    # scaled so that tiny (extended-range) or huge entries do not under/overflow
    m = np.max(np.abs(x)) if len(x) else 0
    if not m > 0 or not np.isfinite(m):
        return m
    y = x / m
    return m * np.sqrt(y @ y)


def _normalise(x):
    return x / _norm(x)


def _dirichlet_rq(op: Operator, x):
    """<x, -L_sym x> / <x, x> evaluated as a sum of nonnegative edge terms."""
    net = op.network
    phi = x / op.sqrt_pi
    dphi = phi[net.edge_i] - phi[net.edge_j]
    return (op.weight @ (dphi * dphi)) / (x @ x)


def _phi_space_rq(op: Operator, g):
    """Rayleigh quotient of P^{1/2}(g - <g>_pi), the deflated image of a phi-space vector.

    Subtracting the pi-mean does not change the Dirichlet form, so it is taken
    from g itself; for an exact indicator g no rounding enters the
    differences and the result keeps full relative accuracy.
    """
    net = op.network
    g = np.asarray(g).astype(op.dtype)
    dg = g[net.edge_i] - g[net.edge_j]
    c = op.pi @ g
    return (op.weight @ (dg * dg)) / (op.pi @ (g * g) - c * c)


def _residual(op: Operator, x, lam) -> float:
    return float(_norm(op.apply(x) + lam * x))


def _record(op: Operator, x, lam, its, converged, note=""):
    x = _normalise(x)
    lam = op.scalar(lam) if op.extended else float(lam)
    return EigenpairRecord(op.T, lam, x, x / op.sqrt_pi, _residual(op, x, lam), its,
                           converged, note=note)


def _shifted_solve(op: Operator, rho, b):
    """(z, shift) with z = (Lap(w) - shift P)^{-1} b.

    ``shift`` is rho, nudged off an exact singularity when the factor breaks
    down; (None, rho) if that keeps failing.
    """
    pat = network_pattern(op.network)
    shift = rho
    for attempt in range(4):
        f = factor_shifted(pat, op.weight, shift * op.pi)
        if f is not None:
            z = f.solve(b)
            if np.all(np.isfinite(z)):
                return z, shift
        floor = op.scalar(np.finfo(op.dtype).tiny)
        shift = shift + op.scalar(1e-12) * max(abs(shift), floor) * (1 + attempt)
    return None, rho


def _orthonormal(vectors, dtype):
    """Orthonormal basis of ``vectors`` (two Gram-Schmidt passes, dtype-generic)."""
    basis = []
    for v in vectors:
        v = np.asarray(v).astype(dtype)
        n0 = _norm(v)
        if not n0 > 0:
            continue
        v = v / n0
        for _ in range(2):
            for q in basis:
                v = v - q * (q @ v)
        nv = _norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return basis


def _project(x, basis):
    for q in basis:
        x = x - q * (q @ x)
    return x


def _rqi(op: Operator, x0, shift0, tol, max_iter, deflate, extra=()):
    """Core iteration; ``extra`` lists further eigenvectors to keep projected out."""
    x = np.asarray(x0).astype(op.dtype)
    nrm = _norm(x)
    if not nrm > 0 or not np.isfinite(nrm):
        raise DomainError("initial vector must be nonzero and finite")
    x = x / nrm
    psi0 = op.sqrt_pi
    basis = _orthonormal(([psi0] if deflate else []) + list(extra), op.dtype)
    if basis:
        x = _project(x, basis)
        if _norm(x) <= 1e-12:
            if deflate and not extra:
                return _record(op, psi0.copy(), 0.0, 0, True, note="stationary")
            raise DomainError("initial vector lies in the deflated subspace")
        x = _normalise(x)
    if op.n == 1:
        return _record(op, x, 0.0, 0, True)
    scale = tol * op.norm_inf
    rho = _dirichlet_rq(op, x) if shift0 is None else op.scalar(shift0)
    res = np.inf
    for it in range(1, max_iter + 1):
        z, used = _shifted_solve(op, rho, psi0 * x)
        if z is None:
            # singular at the shift to working precision: x already spans the null direction
            return _record(op, x, rho, it, True, note="exact shift")
        y = _project(psi0 * z, basis)
        ny = _norm(y)
        if not ny > 0 or not np.isfinite(ny):
            return _record(op, x, rho, it, True, note="exact shift")
        # Rayleigh quotient of y written as rho + <x, y>/<y, y>: same value, but
        # free of the cancellation that floors <y, A y> at eps^2 ||A||
        rho_prev, rho = rho, used + ((x @ y) / ny) / ny
        y = y / ny
        if y @ x < 0:
            y = -y
        x = y
        res = _residual(op, x, rho)
        if res <= scale and abs(rho - rho_prev) <= _RHO_STALL * abs(rho):
            return _record(op, x, rho, it, True)
    return _record(op, x, rho, max_iter, False, note="iteration cap")


def rayleigh_quotient_iteration(gen: Generator, x0, shift0: float | None = None,
                                tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                                deflate_stationary: bool = True,
                                extended: bool | None = None,
                                deflate_vectors=()) -> EigenpairRecord:
    """Rayleigh quotient iteration for -L_sym.

    Each step solves (-L_sym - rho I) y = x through the structured factor of
    Lap(w) - rho P. Stops when ||L_sym x + rho x|| <= tol * ||L_sym||_inf and
    rho has stopped moving. ``shift0`` (a decay rate) replaces the first
    Rayleigh quotient. The stationary vector P^{1/2} e is projected out of
    every iterate unless ``deflate_stationary`` is False; a stationary x0
    returns the exact lam = 0 pair. ``deflate_vectors`` (known eigenvectors
    of L_sym) are projected out as well.

    ``extended=None`` switches to long-double arithmetic automatically when
    float64 cannot represent the Boltzmann factors or the shift. The
    returned record's ``lam``, ``psi`` and ``phi`` then carry that dtype.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if np.shape(x0) != (gen.n,):
        raise StructuralError(f"x0 has shape {np.shape(x0)}, expected ({gen.n},)")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    if extended is None:
        hint = math.log(shift0) if shift0 is not None and shift0 > 0 else None
        extended = EXTENDED_AVAILABLE and needs_extended(gen, hint)
    return _rqi(Operator(gen, extended), x0, shift0, tol, max_iter, deflate_stationary,
                deflate_vectors)


def validate_eigenpair(candidate: EigenpairRecord, guess, threshold: float = VALIDATION_THRESHOLD
                       ) -> bool:
    """Accept when |<psi, guess>| >= threshold (guess normalised here)."""
    g = np.asarray(guess)
    ng = _norm(g)
    if not ng > 0:
        return False
    return bool(abs(candidate.psi @ g) / ng >= threshold)


def refine_eigenpair(gen: Generator, pair: EigenpairRecord, max_iter: int = 3,
                     tol: float = DEFAULT_TOL) -> EigenpairRecord:
    """Polish an eigenpair with long-double Rayleigh quotient steps.

    Local identities of the eigenvector (node balance of its current) hold
    only to about eps * max L_ij / lam in the working precision, because phi
    is nearly constant across fast-equilibrating groups of states. Refining
    in extended precision pushes that floor down by the ratio of the two
    machine epsilons. The validation flags of ``pair`` are carried over.
    Without an extended type the pair is returned unchanged.
    """
    if not EXTENDED_AVAILABLE:
        return pair
    shift = pair.lam if pair.lam > 0 else None
    rec = rayleigh_quotient_iteration(gen, np.asarray(pair.psi, np.longdouble), shift, tol,
                                      max_iter, extended=True)
    return rec.with_validation(pair.validated, pair.overlap, pair.retries, pair.note)


def _deflate(x, psi0):
    """Unit vector along x with the stationary direction removed.

    The raw guess P^{1/2} 1_S overlaps P^{1/2} e by sqrt(pi(S)), which is
    large whenever S carries much equilibrium mass; every nonstationary
    eigenvector is orthogonal to that direction, so only the remainder is
    informative for validation.
    """
    x = x - psi0 * (psi0 @ x)
    return _normalise(x)


class GeneratorCache:
    """Per-temperature generators of one network, built on demand."""

    def __init__(self, net: Network):
        self.network = net
        self._gens = {}
        self._ops = {}

    def __call__(self, T: float) -> Generator:
        T = float(T)
        g = self._gens.get(T)
        if g is None:
            g = self._gens[T] = generator(self.network, T)
        return g

    def operator(self, T: float, extended: bool) -> Operator:
        key = (float(T), bool(extended))
        op = self._ops.get(key)
        if op is None:
            op = self._ops[key] = Operator(self(T), extended)
        return op


def _schedule(schedule):
    s = np.asarray(schedule, float)
    if s.ndim != 1 or len(s) == 0:
        raise DomainError("temperature schedule must be a nonempty sequence")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("temperatures must be positive and finite")
    if np.any(np.diff(s) <= 0):
        raise DomainError("temperature schedule must be strictly increasing")
    return s


def _predict_log_lam(recs, delta, T, two_point):
    """Extrapolated ln lam at T.

    ``two_point`` uses the Arrhenius line through the last two records when
    available; otherwise the last record is carried with the asymptotic
    barrier as slope (with no records, exp(-delta/T) itself).
    """
    if two_point and len(recs) >= 2:
        fit = arrhenius_fit(recs[-2:])
        return math.log(fit.A) - fit.delta / T
    if recs:
        return float(np.log(recs[-1].lam)) - delta * (1 / T - 1 / recs[-1].T)
    return -delta / T


def continue_eigenpair(net: Network, asym: AsymptoticEigenpair, schedule,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       threshold: float = VALIDATION_THRESHOLD, max_retries: int = 3,
                       generators: GeneratorCache | None = None,
                       strict: bool = False, deflate=()) -> EigenpairCurve:
    """Follow one asymptotic eigenpair up an increasing temperature schedule.

    The first guess is P^{1/2} restricted to S_k, with its exact Rayleigh
    quotient as shift. Later guesses carry the previous right eigenvector phi
    over, reweighted with P^{1/2}(T) to track the Boltzmann shift of the
    support, and start from the decay rate extrapolated along the Arrhenius
    line of the last two records. Guesses are validated with the stationary
    direction projected out. A rejected candidate is retried by (a)
    re-orthogonalising the guess against it, (b) extrapolating phi linearly
    from the last two temperatures and (c) shifting to the last rate carried
    along the asymptotic barrier. When every retry fails
    the curve stops there with a diagnostic (or ConvergenceError when
    ``strict``).

    ``deflate`` holds curves of other (slower) eigenpairs; their records at
    the same temperature are projected out of the guess and of every iterate,
    which keeps the iteration off eigenpairs that are already claimed.
    """
    temps = _schedule(schedule)
    gens = generators or GeneratorCache(net)
    curve = EigenpairCurve(asym.k, asym.sink)
    if len(asym.S) == 0:
        raise StructuralError("asymptotic eigenpair carries no state set (keep_sets=False)")
    support = asym.indicator(net.n_states)
    for T in temps:
        gen = gens(T)
        log_hint = -asym.delta / T
        recs = curve.records
        if recs and recs[-1].lam > 0:
            log_hint = min(log_hint, float(np.log(recs[-1].lam)))
        ext = needs_extended(gen, log_hint)
        if ext and (not EXTENDED_AVAILABLE or log_hint < _LOG_TINY_EXT):
            curve.diagnostic = (f"T={T:g}: Boltzmann factors leave the representable range; "
                                "eigenvalue unreachable")
            break
        op = gens.operator(T, ext)
        claimed = [r.psi for c in deflate for r in c.records if r.T == T]
        basis = _orthonormal([op.sqrt_pi] + claimed, op.dtype)
        if not recs:
            raw = support * op.sqrt_pi
        else:
            raw = recs[-1].phi.astype(op.dtype) * op.sqrt_pi
        raw = _normalise(raw)
        guess = _project(raw, basis)
        if not _norm(guess) > 1e-12:
            curve.diagnostic = f"T={T:g}: guess lies in the span of claimed eigenvectors"
            if strict:
                raise ConvergenceError(curve.diagnostic)
            break
        guess = _normalise(guess)
        if not recs:
            shift0 = _phi_space_rq(op, support)
        else:
            shift0 = np.exp(op.scalar(_predict_log_lam(recs, asym.delta, T, two_point=True)))
        tried = []
        rec = _rqi(op, guess, shift0, tol, max_iter, True, claimed)
        ok = rec.converged and validate_eigenpair(rec, guess, threshold)
        tried.append(rec)
        attempt = 0
        while not ok and attempt < max_retries:
            attempt += 1
            shift = None
            if attempt == 1:
                g2 = guess.copy()
                for bad in tried:
                    g2 -= bad.psi * (bad.psi @ g2)
                if _norm(g2) <= 1e-12:
                    continue
                g2 = _normalise(g2)
            elif attempt == 2:
                if len(recs) < 2:
                    continue
                r1, r2 = recs[-1], recs[-2]
                phi = r1.phi + (T - r1.T) / (r1.T - r2.T) * (r1.phi - r2.phi)
                g2 = _project(phi.astype(op.dtype) * op.sqrt_pi, basis)
            else:
                g2 = guess
                shift = np.exp(op.scalar(_predict_log_lam(recs, asym.delta, T, two_point=False)))
            rec = _rqi(op, g2, shift, tol, max_iter, True, claimed)
            tried.append(rec)
            ok = rec.converged and validate_eigenpair(rec, guess, threshold)
        overlap = float(abs(rec.psi @ guess))
        if not ok:
            curve.diagnostic = (f"T={T:g}: no validated eigenpair after {attempt} retries "
                                f"(last overlap {overlap:.3g}, converged={rec.converged})")
            if strict:
                raise ConvergenceError(curve.diagnostic)
            break
        if rec.psi @ guess < 0:
            rec = EigenpairRecord(rec.T, rec.lam, -rec.psi, -rec.phi, rec.residual,
                                  rec.iterations, rec.converged, note=rec.note)
        recs.append(rec.with_validation(True, overlap, attempt))
    return curve


def continue_spectrum(net: Network, pairs, schedule, generators: GeneratorCache | None = None,
                      **kwargs) -> list[EigenpairCurve]:
    """Continue several asymptotic eigenpairs, slowest first.

    Each curve deflates the eigenvectors already found for the lower ranks
    at the same temperature. Keyword arguments go to
    :func:`continue_eigenpair`.
    """
    gens = generators or GeneratorCache(net)
    curves: list[EigenpairCurve] = []
    for asym in sorted(pairs, key=lambda a: a.k):
        curves.append(continue_eigenpair(net, asym, schedule, generators=gens,
                                         deflate=tuple(curves), **kwargs))
    return curves


def arrhenius_fit(curve, T_range=None) -> ArrheniusFit:
    """Least-squares line through (1/T, ln lam).

    ``curve`` is an EigenpairCurve, a sequence of EigenpairRecord, or a pair
    of arrays (T, lam). Only positive finite rates inside the closed
    ``T_range`` (and validated records, when any record is validated) are used.
    """
    if isinstance(curve, EigenpairCurve):
        recs = curve.records
    elif (isinstance(curve, tuple) and len(curve) == 2
          and not isinstance(curve[0], EigenpairRecord)):
        recs = None
        T = np.asarray(curve[0], float)
        lam = np.asarray(curve[1], np.longdouble)
    else:
        recs = list(curve)
    if recs is not None:
        keep = [r for r in recs if r.validated] or recs
        T = np.array([r.T for r in keep], float)
        lam = np.array([r.lam for r in keep], np.longdouble)
    sel = np.isfinite(lam) & (lam > 0)
    if T_range is not None:
        lo, hi = T_range
        sel &= (T >= lo * (1 - 1e-12)) & (T <= hi * (1 + 1e-12))
    if sel.sum() < 2:
        raise DomainError("Arrhenius fit needs at least two positive rates in range")
    T = T[sel]
    loglam = np.log(lam[sel]).astype(float)
    X = np.column_stack([np.ones_like(T), -1.0 / T])
    coef, *_ = np.linalg.lstsq(X, loglam, rcond=None)
    span = (float(T.min()), float(T.max())) if T_range is None else tuple(map(float, T_range))
    return ArrheniusFit(float(np.exp(coef[0])), float(coef[1]), span, int(len(T)))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Full spectrum: lam ascending (lam[0] = 0), phi columns, pi.

    ``phi[:, k]`` is normalised so that sum_i pi_i phi_ik^2 = 1, with its
    largest-magnitude entry positive; ``phi[:, 0]`` is all ones.
    """

    T: float
    lam: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return np.sqrt(self.pi)[:, None] * self.phi

    @property
    def n(self) -> int:
        return len(self.lam)

    def record(self, k: int, gen: Generator | None = None) -> EigenpairRecord:
        """Eigenpair k as an EigenpairRecord (residual needs ``gen``)."""
        psi = self.psi[:, k]
        res = _residual(Operator(gen), psi, self.lam[k]) if gen is not None else float("nan")
        return EigenpairRecord(self.T, float(self.lam[k]), psi, self.phi[:, k].copy(), res, 0,
                               True, True, 1.0)

    def nearest(self, psi) -> int:
        """Index of the eigenvector closest in angle to ``psi``."""
        return int(np.argmax(np.abs(self.psi.T @ psi)))


def gth_factor(pi, W):
    """Pivoted LDL^T factors of P^{-1/2} Lap(W) P^{-1/2} (dense)."""
    return kernels.gth_ldl_dense(np.ascontiguousarray(pi, float), np.ascontiguousarray(W, float))


def dense_spectrum(gen: Generator, cap: int = DENSE_CAP) -> SpectralDecomposition:
    """All eigenpairs of -L_sym with high relative accuracy.

    The subtraction-free pivoted factorisation G G^T = -L_sym is followed by
    a preconditioned Jacobi SVD of G (LAPACK dgejsv); eigenvalues are the
    squared singular values. A plain symmetric eigensolver is used only if
    the SVD reports failure.
    """
    n = gen.n
    if n > cap:
        raise DomainError(f"dense spectrum capped at {cap} states, network has {n}")
    net = gen.network
    pi = gen.pi
    sq = gen.sqrt_pi
    psi0 = sq / np.linalg.norm(sq)
    if n == 1:
        return SpectralDecomposition(gen.T, np.zeros(1), np.ones((1, 1)), pi)
    W = np.zeros((n, n))
    W[net.edge_i, net.edge_j] = gen.weight
    W[net.edge_j, net.edge_i] = gen.weight
    Lm, d, _ = gth_factor(pi, W)
    G = Lm[:, : n - 1] * np.sqrt(d[: n - 1])
    sva, u, _v, work, _iw, info = lapack.dgejsv(G, joba=3, jobu=0, jobv=3, jobr=1, jobt=1,
                                                 jobp=1)
    if info == 0 and np.all(np.isfinite(sva)):
        lam = (sva * (work[0] / work[1])) ** 2
        o = np.argsort(lam, kind="stable")
        lam = np.concatenate([[0.0], lam[o]])
        U = np.column_stack([psi0, u[:, o]])
    else:
        evals, U = np.linalg.eigh(-gen.L_sym.toarray())
        lam = np.maximum(evals, 0.0)
        lam[0] = 0.0
        U[:, 0] = psi0
    phi = U / sq[:, None]
    norm = np.sqrt(np.einsum("i,ik->k", pi, phi * phi))
    phi /= norm
    pos = phi[np.argmax(np.abs(phi), axis=0), np.arange(n)] < 0
    phi[:, pos] *= -1.0
    phi[:, 0] = 1.0
    return SpectralDecomposition(gen.T, lam, phi, pi.copy())


def evolve_distribution(dec: SpectralDecomposition, p0, t):
    """p(t) = sum_k c_k exp(-lam_k t) P phi^k with c_k = <phi^k, p0>.

    ``t`` may be a scalar (returns a vector) or a sequence (returns rows).
    """
    p0 = np.asarray(p0, float)
    if p0.shape != (dec.n,):
        raise StructuralError(f"p0 has shape {p0.shape}, expected ({dec.n},)")
    if np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-12:
        raise DomainError("p0 must be a probability vector")
    ts = np.atleast_1d(np.asarray(t, float))
    if np.any(ts < 0) or not np.all(np.isfinite(ts)):
        raise DomainError("times must be finite and nonnegative")
    c = dec.phi.T @ p0
    c[0] = 1.0
    decay = np.exp(-np.outer(ts, dec.lam))
    out = (decay * c) @ dec.phi.T * dec.pi
    return out[0] if np.ndim(t) == 0 else out
