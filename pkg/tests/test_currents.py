"""Eigencurrents, emission/absorption, cuts and cut current distributions."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ktnspec import synthetic
from ktnspec.currents import (CutSet, cut_current_distribution, cut_flux, eigencurrent,
                              emission_absorption, emission_absorption_cut, node_balance_residual,
                              partition_cut)
from ktnspec.errors import StructuralError
from ktnspec.mst import asymptotic_spectrum
from ktnspec.rates import generator
from ktnspec.spectral import (continue_eigenpair, dense_spectrum, rayleigh_quotient_iteration,
                              refine_eigenpair)


def _pair(net, T, k):
    gen = generator(net, T)
    return gen, dense_spectrum(gen).record(k, gen)


def test_stationary_current_vanishes(chain3):
    gen, r0 = _pair(chain3, 0.2, 0)
    assert np.all(eigencurrent(gen, r0).F == 0.0)


def test_two_state_current():
    net = synthetic.chain([0.0, 0.2], [1.0])
    gen, r = _pair(net, 0.2, 1)
    f = eigencurrent(gen, r)
    em = emission_absorption(gen, r)
    np.testing.assert_allclose(f.divergence(), em.emission, rtol=1e-14)
    src = int(np.argmax(r.phi))
    assert f.oriented(src, 1 - src) == pytest.approx(r.lam * gen.pi[src] * r.phi[src], rel=1e-14)
    assert em.emitting.sum() == 1
    assert em.total_emitted == pytest.approx(-em.total_absorbed, rel=1e-14)
    cut = emission_absorption_cut(gen, r)
    assert len(cut) == 1
    assert cut.flux == pytest.approx(r.lam * gen.pi[src] * r.phi[src], rel=1e-14)


def test_chain3_node_balance(chain3):
    gen, r = _pair(chain3, 0.1, 1)
    assert node_balance_residual(eigencurrent(gen, r), gen, r) <= 1e-12


def test_antisymmetry(chain3):
    gen, r = _pair(chain3, 0.2, 1)
    f = eigencurrent(gen, r)
    for i, j in ((0, 1), (1, 2)):
        assert f.oriented(i, j) == -f.oriented(j, i)
    assert f.oriented(0, 2) == 0.0


def test_time_scaling(chain3):
    gen, r = _pair(chain3, 0.2, 1)
    t = 3.0 / r.lam
    f0 = eigencurrent(gen, r)
    ft = eigencurrent(gen, r, t=t)
    np.testing.assert_array_equal(ft.F, f0.F * np.exp(-r.lam * t))
    np.testing.assert_array_equal(f0.at_time(t).F, ft.F)


def test_pair_checks(chain3):
    gen, r = _pair(chain3, 0.2, 1)
    with pytest.raises(StructuralError):
        eigencurrent(generator(chain3, 0.3), r)
    net5 = synthetic.chain([0.0, 0.1, 0.2, 0.3, 0.4], [1, 1.1, 1.2, 1.3])
    with pytest.raises(StructuralError):
        eigencurrent(generator(net5, 0.2), r)


def test_single_sign_has_no_cut(chain3):
    gen, r0 = _pair(chain3, 0.2, 0)
    with pytest.raises(StructuralError):
        emission_absorption_cut(gen, r0)


@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.2, 0.5]))
def test_global_balance(seed, T):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(int(rng.integers(2, 40)), rng)
    gen = generator(net, T)
    d = dense_spectrum(gen)
    k = int(rng.integers(1, net.n_states))
    em = emission_absorption(gen, d.record(k, gen))
    assert em.imbalance <= 1e-12 or abs(em.emission.sum()) <= 1e-12 * np.abs(em.emission).max()


def test_chain3_cut_flux_identities(chain3, rng):
    gen, r = _pair(chain3, 0.1, 1)
    f = eigencurrent(gen, r)
    em = emission_absorption(gen, r)
    cut = emission_absorption_cut(gen, r, f)
    assert cut.flux == pytest.approx(em.total_emitted, rel=1e-12)
    assert cut_flux(f, (np.arange(3), [])) == 0.0
    assert cut_flux(f, em.emitting) == cut.flux
    for inside in ([0], [1], [2], [0, 2], [0, 1]):
        outside = sorted(set(range(3)) - set(inside))
        expect = em.emission[inside].sum()
        assert cut_flux(f, (inside, outside)) == pytest.approx(expect, rel=1e-12,
                                                               abs=1e-12 * abs(cut.flux))


def test_partition_errors(chain3):
    gen, r = _pair(chain3, 0.1, 1)
    f = eigencurrent(gen, r)
    with pytest.raises(StructuralError):
        cut_flux(f, ([0, 1], [1, 2]))
    with pytest.raises(StructuralError):
        cut_flux(f, ([0], [2]))
    with pytest.raises(StructuralError):
        cut_flux(f, ([0, 5], [1, 2]))
    with pytest.raises(StructuralError):
        partition_cut(f, np.ones(4, bool))


@pytest.mark.parametrize("seed", range(3))
def test_max_cut_random_30(seed):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(30, rng)
    gen = generator(net, 0.2)
    d = dense_spectrum(gen)
    for k in (1, 2, 3):
        r = d.record(k, gen)
        f = eigencurrent(gen, r)
        best = emission_absorption_cut(gen, r, f).flux
        for _ in range(1000):
            m = rng.random(30) < rng.random()
            assert cut_flux(f, m) <= best * (1 + 1e-12)


@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.2, 0.5]))
def test_node_balance_invariant(seed, T):
    rng = np.random.default_rng(seed)
    net = synthetic.random_network(int(rng.integers(2, 50)), rng)
    gen = generator(net, T)
    d = dense_spectrum(gen)
    for k in range(1, min(5, net.n_states)):
        r = refine_eigenpair(gen, d.record(k, gen))
        assert node_balance_residual(eigencurrent(gen, r), gen, r) <= 1e-10


def test_refinement_lowers_balance_floor():
    # lam_1 / max L is about 1e-9 here: double-precision phi cannot carry the balance
    rng = np.random.default_rng(83)
    net = synthetic.random_network(int(rng.integers(2, 50)), rng)
    gen = generator(net, 0.1)
    raw = dense_spectrum(gen).record(1, gen)
    fine = refine_eigenpair(gen, raw)
    before = node_balance_residual(eigencurrent(gen, raw), gen, raw)
    after = node_balance_residual(eigencurrent(gen, fine), gen, fine)
    assert before > 1e-10 and after <= 1e-12
    assert abs(float(fine.lam) - raw.lam) <= 1e-12 * raw.lam


def test_continued_pair_node_balance(rng):
    net = synthetic.random_network(40, rng)
    a = asymptotic_spectrum(net, 2)[1]
    c = continue_eigenpair(net, a, [0.1, 0.15, 0.2])
    for r in c.records:
        gen = generator(net, r.T)
        r = refine_eigenpair(gen, r)
        assert node_balance_residual(eigencurrent(gen, r), gen, r) <= 1e-10


# ------------------------------------------------------------------ distributions


def test_single_edge_share():
    net = synthetic.chain([0.0, 0.2], [1.0])
    gen, r = _pair(net, 0.2, 1)
    dist = cut_current_distribution(emission_absorption_cut(gen, r))
    np.testing.assert_allclose(dist.shares, [1.0])
    np.testing.assert_allclose(dist.cdf, [1.0])


def test_two_equal_edges():
    cut = CutSet(np.array([True, False, False]), np.array([0, 1]), np.array([0.5, 0.5]), 1.0)
    dist = cut_current_distribution(cut)
    np.testing.assert_array_equal(dist.shares, [0.5, 0.5])
    np.testing.assert_array_equal(dist.cdf, [0.5, 1.0])


def test_empty_cut_rejected():
    cut = CutSet(np.ones(3, bool), np.zeros(0, np.int64), np.zeros(0), 0.0)
    with pytest.raises(StructuralError):
        cut_current_distribution(cut)


def test_three_funnel_distribution():
    net = synthetic.multi_funnel(3, 8, 11)
    T = 0.15
    gen = generator(net, T)
    d = dense_spectrum(gen)
    spectrum = asymptotic_spectrum(net, 2)
    for a in spectrum:
        guess = np.sqrt(gen.pi) * a.indicator(net.n_states)
        rec = rayleigh_quotient_iteration(gen, guess / np.linalg.norm(guess))
        j = d.nearest(rec.psi)
        ref = d.record(j, gen)
        if rec.psi @ ref.psi < 0:
            ref = d.record(j, gen)
            ref = type(ref)(ref.T, ref.lam, -ref.psi, -ref.phi, ref.residual, 0, True)
        got = cut_current_distribution(emission_absorption_cut(gen, rec))
        exp = cut_current_distribution(emission_absorption_cut(gen, ref))
        np.testing.assert_array_equal(got.edges, exp.edges)
        np.testing.assert_allclose(got.shares, exp.shares, rtol=1e-9, atol=1e-12)
        assert np.all(np.diff(got.currents) <= 0)
        assert got.cdf[-1] == pytest.approx(1.0, rel=1e-12)
