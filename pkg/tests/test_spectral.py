"""RQI, validation, continuation, Arrhenius fits, dense oracle and evolution."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from ktnspec import synthetic
from ktnspec.errors import ConvergenceError, DomainError, StructuralError
from ktnspec.mst import asymptotic_spectrum
from ktnspec.rates import generator, pairwise_rate
from ktnspec.spectral import (EigenpairRecord, GeneratorCache, arrhenius_fit, continue_eigenpair,
                              continue_spectrum, dense_spectrum, evolve_distribution,
                              rayleigh_quotient_iteration, validate_eigenpair)

from . import oracles


def _unit(x):
    return x / np.linalg.norm(x)


def _guess(gen, a):
    return _unit(np.sqrt(gen.pi) * a.indicator(gen.n))


# ------------------------------------------------------------------ RQI


def test_rqi_two_state_exact(two_state):
    gen = generator(two_state, 0.3)
    r = math.exp(-1 / 0.3)
    rec = rayleigh_quotient_iteration(gen, np.array([1.0, -1.0]) / math.sqrt(2))
    assert rec.lam == pytest.approx(2 * r, rel=1e-14)
    assert rec.iterations <= 1 and rec.converged


def test_rqi_stationary(chain3):
    gen = generator(chain3, 0.2)
    rec = rayleigh_quotient_iteration(gen, np.sqrt(gen.pi))
    assert rec.lam == 0.0
    assert abs(abs(rec.psi @ _unit(np.sqrt(gen.pi))) - 1) < 1e-15


@pytest.mark.parametrize("seed", range(4))
def test_rqi_random_50(seed):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(50, rng)
    spectrum = asymptotic_spectrum(net, 5)
    T = 0.1
    gen = generator(net, T)
    dec = dense_spectrum(gen)
    for a in spectrum:
        rec = rayleigh_quotient_iteration(gen, _guess(gen, a))
        j = dec.nearest(rec.psi)
        assert rec.converged
        assert rec.residual <= 1e-10 * gen.lsym_norm_inf
        assert abs(rec.lam - dec.lam[j]) <= 1e-8 * dec.lam[j]
        assert abs(rec.psi @ dec.psi[:, j]) >= 1 - 1e-8


def test_rqi_argument_errors(chain3):
    gen = generator(chain3, 0.2)
    with pytest.raises(StructuralError):
        rayleigh_quotient_iteration(gen, np.ones(2))
    with pytest.raises(DomainError):
        rayleigh_quotient_iteration(gen, np.ones(3), tol=0.0)


def test_record_normalisation(rng):
    net = synthetic.random_network(40, rng)
    gen = generator(net, 0.15)
    for a in asymptotic_spectrum(net, 4):
        rec = rayleigh_quotient_iteration(gen, _guess(gen, a))
        assert abs(np.linalg.norm(rec.psi) - 1) <= 1e-12
        assert abs(gen.pi @ rec.phi ** 2 - 1) <= 1e-10


# ------------------------------------------------------------------ validation


def _record(psi):
    return EigenpairRecord(0.1, 1.0, psi, psi, 0.0, 1, True)


def test_validate_identity_and_orthogonal():
    g = _unit(np.array([1.0, 2.0, -1.0]))
    assert validate_eigenpair(_record(g), g)
    o = _unit(np.array([1.0, 0.0, 1.0]))
    assert abs(o @ g) < 1e-15
    assert not validate_eigenpair(_record(o), g)


def _nested_pair():
    # S_2 = {2} inside S_1 = {1, 2}; sinks 0.05 apart, barriers 1.3 and 1.29
    return synthetic.from_edges([0.0, 0.2, 0.25], [(0, 1), (1, 2)], [1.5, 1.54])


def test_wrong_pair_detected_and_avoided():
    net = _nested_pair()
    spectrum = asymptotic_spectrum(net)
    assert [a.S.tolist() for a in spectrum] == [[1, 2], [2]]
    T = 0.1
    gen = generator(net, T)
    dec = dense_spectrum(gen)
    # bare RQI from the k = 2 guess lands on the k = 1 pair
    wrong = rayleigh_quotient_iteration(gen, _guess(gen, spectrum[1]))
    assert dec.nearest(wrong.psi) == 1
    curves = continue_spectrum(net, spectrum, np.linspace(T / 2, T, 4))
    first = curves[0].records[-1]
    # the orthogonality relation against the slower pair exposes it
    assert validate_eigenpair(wrong, first.psi)
    assert validate_eigenpair(first, dec.psi[:, 1], threshold=1 - 1e-10)
    for c in curves:
        assert not c.truncated
        for r in c.records:
            d = dense_spectrum(generator(net, r.T))
            assert d.nearest(r.psi) == c.k
            assert abs(r.lam - d.lam[c.k]) <= 1e-8 * d.lam[c.k]


def test_continuation_retries_then_truncates():
    # an unreachable overlap threshold exhausts every retry at the first temperature
    net = _nested_pair()
    spectrum = asymptotic_spectrum(net)
    c = continue_eigenpair(net, spectrum[0], [0.05, 0.06], threshold=0.999)
    assert c.truncated and c.records == []
    assert "after 3 retries" in c.diagnostic and "T=0.05" in c.diagnostic
    with pytest.raises(ConvergenceError):
        continue_eigenpair(net, spectrum[0], [0.05, 0.06], threshold=0.999, strict=True)


def test_eigenvalue_crossing():
    # satellite 1: higher barrier but 27x larger prefactor, so the rates cross near T = 0.015
    net = synthetic.from_edges([0.0, 0.3, 0.32], [(0, 1), (0, 2)], [1.3, 1.27],
                               nu=[1.0, 3.0, 1.0])
    spectrum = asymptotic_spectrum(net)
    sched = np.linspace(0.005, 0.05, 19)
    c1, c2 = continue_spectrum(net, spectrum, sched)
    lam1, lam2 = c1.lambdas.astype(float), c2.lambdas.astype(float)
    assert lam1[0] < lam2[0] and lam1[-1] > lam2[-1]  # the curves do cross
    for c in (c1, c2):
        assert not c.truncated and len(c.records) == len(sched)
        for r in c.records:
            assert int(np.argmax(np.abs(r.phi[1:]))) + 1 == c.sink


# ------------------------------------------------------------------ continuation


def test_continue_two_state():
    net = synthetic.chain([0.0, 0.2], [1.0])
    (a,) = asymptotic_spectrum(net)
    c = continue_eigenpair(net, a, [0.05, 0.1, 0.2])
    for r in c.records:
        exact = pairwise_rate(net, 0, 1, r.T) + pairwise_rate(net, 1, 0, r.T)
        assert float(r.lam) == pytest.approx(exact, rel=1e-13)


def test_continue_chain3_vs_dense(chain3):
    (a,) = asymptotic_spectrum(chain3, 1)
    sched = np.round(np.arange(0.02, 0.2 + 1e-9, 0.01), 10)
    c = continue_eigenpair(chain3, a, sched)
    assert len(c.records) == len(sched) and not c.truncated
    for r in c.records:
        d = dense_spectrum(generator(chain3, r.T))
        assert abs(float(r.lam) - d.lam[1]) <= 1e-9 * d.lam[1]
        assert r.validated and r.residual <= 1e-10 * generator(chain3, r.T).lsym_norm_inf


def test_schedule_must_increase(chain3):
    (a,) = asymptotic_spectrum(chain3, 1)
    with pytest.raises(DomainError):
        continue_eigenpair(chain3, a, [0.1, 0.05])
    with pytest.raises(DomainError):
        continue_eigenpair(chain3, a, [-0.1, 0.05])


def test_continue_through_underflow():
    # e^{-Delta/T} far below the double range at the cold end
    net = synthetic.chain([0.0, 0.1], [2.1])
    (a,) = asymptotic_spectrum(net)
    c = continue_eigenpair(net, a, [0.002, 0.004, 0.1])
    assert not c.truncated
    exact_log = -2.0 / 0.002 + math.log1p(math.exp(-0.1 / 0.002))
    assert float(np.log(c.records[0].lam)) == pytest.approx(exact_log, rel=1e-12)
    fit = arrhenius_fit(c.records[:2])
    assert fit.delta == pytest.approx(2.0, rel=1e-6)


# ------------------------------------------------------------------ Arrhenius


def test_arrhenius_exact():
    T = np.array([0.05, 0.07, 0.1, 0.15, 0.2])
    fit = arrhenius_fit((T, 3 * np.exp(-0.9 / T)))
    assert fit.A == pytest.approx(3, rel=1e-10)
    assert fit.delta == pytest.approx(0.9, rel=1e-10)


def test_arrhenius_chain3(chain3):
    (a,) = asymptotic_spectrum(chain3, 1)
    c = continue_eigenpair(chain3, a, np.linspace(0.02, 0.05, 7))
    assert abs(c.fit((0.02, 0.05)).delta - 0.9) / 0.9 <= 0.05


def test_arrhenius_needs_two_points():
    with pytest.raises(DomainError):
        arrhenius_fit(([0.1, 0.2], [0.0, 1e-3]))
    with pytest.raises(DomainError):
        arrhenius_fit(([0.1, 0.2], [1e-4, 1e-3]), T_range=(0.15, 0.3))


# ------------------------------------------------------------------ dense oracle


def test_dense_two_state(two_state):
    T = 0.25
    d = dense_spectrum(generator(two_state, T))
    r = math.exp(-1 / T)
    np.testing.assert_allclose(d.lam, [0, 2 * r], rtol=1e-14, atol=0)
    np.testing.assert_allclose(np.abs(d.phi[:, 1]), [1, 1], rtol=1e-14)
    assert d.phi[0, 1] * d.phi[1, 1] < 0


@given(st.integers(0, 10_000), st.sampled_from([0.05, 0.1, 0.3]))
def test_dense_normalisation(seed, T):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(int(rng.integers(2, 60)), rng)
    d = dense_spectrum(generator(net, T))
    G = d.phi.T @ (d.pi[:, None] * d.phi)
    assert np.max(np.abs(G - np.eye(net.n_states))) <= 1e-10
    assert np.all(d.phi[:, 0] == 1.0)
    assert np.all(np.diff(d.lam) >= 0) and d.lam[0] == 0


def test_dense_chain3_asymptotics(chain3):
    d = dense_spectrum(generator(chain3, 0.05))
    assert 0.85 <= -0.05 * math.log(d.lam[1]) <= 0.95


def test_dense_cap(chain3):
    with pytest.raises(DomainError):
        dense_spectrum(generator(chain3, 0.1), cap=2)


@pytest.mark.parametrize("seed", range(3))
def test_dense_relative_accuracy_mpmath(seed):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(12, rng)
    T = 0.03
    gen = generator(net, T)
    d = dense_spectrum(gen)
    ref = oracles.decay_rates(gen, 200)
    np.testing.assert_allclose(d.lam[1:], [float(x) for x in ref], rtol=1e-12)


# ------------------------------------------------------------------ evolution


def test_evolve_stationary(chain3):
    d = dense_spectrum(generator(chain3, 0.2))
    for t in (0.0, 1.0, 1e5):
        np.testing.assert_allclose(evolve_distribution(d, d.pi, t), d.pi, rtol=1e-12)


def test_evolve_long_time(chain3):
    d = dense_spectrum(generator(chain3, 0.2))
    p = evolve_distribution(d, np.array([0.0, 1.0, 0.0]), 1e6 / d.lam[1])
    assert 0.5 * np.abs(p - d.pi).sum() <= 1e-10


def test_evolve_chain3_vs_expm(chain3):
    gen = generator(chain3, 0.2)
    d = dense_spectrum(gen)
    t = 1 / d.lam[1]
    p0 = np.array([0.0, 1.0, 0.0])
    ref = p0 @ expm(gen.L.toarray() * t)
    assert 0.5 * np.abs(evolve_distribution(d, p0, t) - ref).sum() <= 1e-10


def test_evolve_low_temperature_mpmath(rng):
    net = synthetic.random_network(25, rng)
    gen = generator(net, 0.1)
    d = dense_spectrum(gen)
    p0 = rng.random(25)
    p0 /= p0.sum()
    times = np.linspace(0, 10 / d.lam[1], 5)
    ref = oracles.evolve(gen, p0, times)
    P = evolve_distribution(d, p0, times)
    assert np.max(0.5 * np.abs(P - ref).sum(axis=1)) <= 1e-10


@given(st.integers(0, 10_000), st.floats(0.0, 1e4))
def test_evolve_conserves_probability(seed, t):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(int(rng.integers(2, 40)), rng)
    d = dense_spectrum(generator(net, 0.2))
    p0 = rng.random(net.n_states)
    p0 /= p0.sum()
    assert abs(evolve_distribution(d, p0, t).sum() - 1) <= 1e-12


def test_evolve_errors(chain3):
    d = dense_spectrum(generator(chain3, 0.2))
    with pytest.raises(StructuralError):
        evolve_distribution(d, np.ones(2) / 2, 1.0)
    with pytest.raises(DomainError):
        evolve_distribution(d, np.array([0.5, 0.6, -0.1]), 1.0)
    with pytest.raises(DomainError):
        evolve_distribution(d, np.ones(3) / 3, -1.0)


# ------------------------------------------------------------------ caching


def test_generator_cache_is_idempotent(chain3):
    gc = GeneratorCache(chain3)
    assert gc(0.1) is gc(0.1)
    assert gc(0.1) is not gc(0.2)


@given(st.integers(0, 10_000))
def test_oracle_equivalence_small(seed):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(int(rng.integers(3, 30)), rng)
    spectrum = asymptotic_spectrum(net, min(3, net.n_states - 1))
    gc = GeneratorCache(net)
    # start cold: the asymptotic guess is only trustworthy well below the level spacing
    schedule = np.round(np.arange(0.02, 0.2 + 1e-9, 0.01), 10)
    for c in continue_spectrum(net, spectrum, schedule, generators=gc):
        assert not c.truncated
        for r in c.records:
            d = dense_spectrum(gc(r.T))
            j = d.nearest(r.psi)
            assert abs(r.psi @ d.psi[:, j]) >= 0.999999
            assert abs(float(r.lam) - d.lam[j]) <= 1e-8 * (1 + d.lam[j])
