"""Tests for the dense-coding chain, capacities and the optimiser."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from cv_entangler import densecoding as dc
from cv_entangler import gaussian as gs
from cv_entangler import kernels
from cv_entangler import protocols as pr
from cv_entangler.oracle import decode, sample_chain


def chain_coefficients(t1, t2, g):
    """Coefficients of the readouts, by pushing unit inputs through the elementwise chain.

    Returns ``(signal, noise)``: ``signal[k]`` over ``(x0, p0)`` and
    ``noise[k]`` over the six state quadratures.
    """
    basis = np.eye(6)
    noise = np.array(decode(*basis, t1, t2, g))
    zero = np.zeros(2)
    sig = np.array(decode(np.array([1.0, 0.0]), np.array([0.0, 1.0]), zero, zero, zero, zero, t1, t2, g))
    return sig, noise


configs = st.builds(
    dc.DecodingConfig,
    t1=st.floats(-1, 1),
    t2=st.floats(-1, 1),
    g=st.floats(-3, 3),
    P=st.floats(0, 5),
)


@settings(max_examples=60, deadline=None)
@given(configs)
def test_propagate_matches_elementwise_chain(config):
    decomposition = dc.propagate(pr.protocol2_state(0.5), config)
    sig, noise = chain_coefficients(config.t1, config.t2, config.g)
    np.testing.assert_allclose(decomposition.signal_coeffs, sig, atol=1e-12)
    np.testing.assert_allclose(decomposition.noise_vectors, noise, atol=1e-12)


def test_reconstructed_noise_equals_covariance_propagation():
    # N = v^T gamma v equals the readout variance of the transformed state
    gamma = pr.protocol1_state(0.7)
    config = dc.DecodingConfig(0.6, 0.8, 0.0, 1.0)
    state = gs.apply_transform(gamma, dc.ubs(1, 2, config.t1, 3))
    state = gs.apply_transform(state, dc.ubs(0, 1, config.t2, 3))
    noise = dc.propagate(gamma, config).noise_powers(gamma)
    # x readout is x of output A; p readout is p of output B
    assert noise[0] == pytest.approx(state[0, 0], abs=1e-12)
    assert noise[1] == pytest.approx(state[3, 3], abs=1e-12)


def test_charlie_drops_out_without_feed_forward():
    decomposition = dc.propagate(pr.protocol3_state(0.4), dc.DecodingConfig(1.0, 0.6, 0.0, 1.0))
    np.testing.assert_array_equal(decomposition.noise_vectors[:, 4:], 0.0)


def test_full_transmission_reads_alice_directly():
    decomposition = dc.propagate(pr.protocol1_state(0.4), dc.DecodingConfig(0.3, 1.0, 0.2, 1.0))
    np.testing.assert_allclose(decomposition.signal_coeffs[0], [1.0, 0.0], atol=1e-15)


def test_propagate_requires_three_modes():
    with pytest.raises(ValueError):
        dc.propagate(gs.vacuum(2), dc.DecodingConfig(0.5, 0.5))


@pytest.mark.parametrize("kwargs", [dict(t1=1.2, t2=0.5), dict(t1=0.5, t2=-1.5), dict(t1=0, t2=0, P=-1.0),
                                    dict(t1=0, t2=0, g=math.inf)])
def test_decoding_config_validation(kwargs):
    with pytest.raises(ValueError):
        dc.DecodingConfig(**kwargs)


def test_ubs_negative_amplitude_is_symplectic():
    S = dc.ubs(0, 2, -0.3, 3)
    assert gs.is_symplectic(S)
    np.testing.assert_allclose(S[0, 0], -0.3)


def test_capacity_formula_and_photon_number():
    gamma = pr.protocol2_state(0.5)
    config = dc.DecodingConfig(0.8, 0.7, 0.3, 1.0)
    result = dc.capacity(gamma, config)
    d = dc.propagate(gamma, config)
    snr = 2 * config.P * np.sum(d.signal_coeffs**2, axis=1) / np.einsum("ki,ij,kj->k", d.noise_vectors, gamma, d.noise_vectors)
    assert result.snr == pytest.approx(tuple(snr), rel=1e-12)
    assert result.capacity == pytest.approx(sum(0.5 * math.log1p(s) for s in snr), rel=1e-12)
    assert result.nbar == pytest.approx((gamma[0, 0] + gamma[1, 1]) / 4 - 0.5 + 1.0, rel=1e-12)


@pytest.mark.slow
def test_capacity_matches_sampled_chain():
    gamma = pr.protocol2_state(0.5)
    config = dc.DecodingConfig(0.8, 0.7, 0.3, 1.0)
    sampled = sample_chain(gamma, config.t1, config.t2, config.g, config.P, 10**7, np.random.default_rng(2))
    for s, a in zip(sampled.snr, dc.capacity(gamma, config).snr):
        np.testing.assert_approx_equal(s, a, significant=3)


def test_baselines():
    coh, sq = dc.baseline_capacities(1.0)
    assert coh == pytest.approx(math.log(2), abs=1e-15)
    assert sq == pytest.approx(math.log(3), abs=1e-15)
    assert dc.baseline_capacities(0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        dc.baseline_capacities(-1.0)


def test_capacity_sign_flip_of_charlie():
    # a pi phase shift on C is undone by flipping both splitter amplitudes
    rng = np.random.default_rng(5)
    flip = gs.phase_flip(2, 3)
    for protocol in pr.Protocol:
        basis = dc._basis(protocol)
        flipped = np.ascontiguousarray(np.stack([flip @ k @ flip for k in basis]))
        for _ in range(20):
            r, th1, th2 = rng.uniform(0, 1), rng.uniform(0, np.pi), rng.uniform(0, np.pi)
            a = kernels.capacity_point(basis, r, th1, th2, 3.0)[0]
            b = kernels.capacity_point(flipped, r, np.pi - th1, np.pi - th2, 3.0)[0]
            assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("protocol", list(pr.Protocol))
@pytest.mark.parametrize("nbar", [0.3, 2.0, 12.0])
def test_optimum_meets_photon_budget(protocol, nbar):
    result = dc.optimize_capacity(protocol, nbar)
    assert result.nbar == pytest.approx(nbar, abs=1e-9)
    assert result.capacity >= 0
    assert result.config.P >= 0


@pytest.mark.parametrize("protocol", list(pr.Protocol))
def test_gain_is_stationary(protocol):
    result = dc.optimize_capacity(protocol, 3.0)
    gamma = pr.state_at(protocol, result.squeezing)
    c = result.config
    h = 1e-5

    def cap(g):
        return dc.capacity(gamma, dc.DecodingConfig(c.t1, c.t2, g, c.P)).capacity

    derivative = (cap(c.g + h) - cap(c.g - h)) / (2 * h)
    assert abs(derivative) < 1e-6
    assert cap(c.g + 1e-2) <= result.capacity and cap(c.g - 1e-2) <= result.capacity


def reference_optimum(protocol, nbar, starts=24, seed=0):
    """Multi-start Nelder-Mead over (r, angle1, angle2, g) on the generic capacity."""
    rng = np.random.default_rng(seed)
    r_max = dc.max_squeezing(protocol, nbar)

    def negative(z):
        r = min(max(z[0], 0.0), r_max)
        gamma = pr.state_at(protocol, r)
        power = nbar - gs.photon_number(gamma)
        if power < 0:
            return 0.0
        config = dc.DecodingConfig(math.cos(z[1]), math.cos(z[2]), z[3], power)
        return -dc.capacity(gamma, config).capacity

    best = 0.0
    for _ in range(starts):
        z0 = [rng.uniform(0, r_max), rng.uniform(0, np.pi), rng.uniform(0, np.pi), rng.uniform(-1, 1)]
        res = minimize(negative, z0, method="Nelder-Mead", options=dict(xatol=1e-9, fatol=1e-13, maxiter=20000))
        best = min(best, res.fun)
    return -best


@pytest.mark.slow
@pytest.mark.parametrize("protocol", list(pr.Protocol))
@pytest.mark.parametrize("nbar", [0.5, 5.0])
def test_optimizer_agrees_with_reference_search(protocol, nbar):
    ours = dc.optimize_capacity(protocol, nbar).capacity
    reference = reference_optimum(protocol, nbar)
    assert ours >= reference - 1e-8
    assert ours == pytest.approx(reference, abs=1e-6)


def test_zero_photons_gives_zero_capacity():
    for protocol in pr.Protocol:
        assert dc.optimize_capacity(protocol, 0.0).capacity == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        dc.optimize_capacity(1, -0.5)


def test_protocol3_beats_squeezed_baseline_at_twenty():
    assert dc.optimize_capacity(3, 20.0).capacity > dc.baseline_capacities(20.0)[1]


@pytest.mark.parametrize("nbar", [0.2, 1.0, 8.0, 20.0])
def test_ordering_and_charlie_bound(nbar):
    c1, c2, c3 = (dc.optimize_capacity(p, nbar).capacity for p in pr.Protocol)
    assert c3 >= c2 - 1e-12 and c2 >= c1 - 1e-12
    coh = dc.baseline_capacities(nbar)[0]
    for p in pr.Protocol:
        ignored = dc.optimize_capacity(p, nbar, ignore_charlie=True)
        assert ignored.capacity <= coh + 1e-12
        assert ignored.config.t1 == 1.0 and ignored.config.g == 0.0


def test_sweep_matches_single_points():
    grid = [0.1, 0.7, 3.0]
    rows = dc.capacity_sweep(2, grid, workers=2)
    assert [row.nbar for row in rows] == grid
    for row in rows:
        single = dc.optimize_capacity(2, row.nbar)
        assert row.result.capacity == single.capacity
        assert (row.coherent, row.squeezed) == dc.baseline_capacities(row.nbar)


@pytest.mark.parametrize("grid", [[], [1.0, 0.5]])
def test_sweep_rejects_bad_grids(grid):
    with pytest.raises(ValueError):
        dc.capacity_sweep(1, grid)


def test_find_crossing_brackets():
    crossing = dc.find_crossing(2, "coh", 0.05, 1.0)
    lo, hi = crossing.bracket
    assert hi - lo <= 1e-3
    assert dc.capacity_excess(2, lo)[0] <= dc.CROSSING_MARGIN
    assert dc.capacity_excess(2, hi)[0] > dc.CROSSING_MARGIN
    with pytest.raises(ValueError):
        dc.find_crossing(2, "coh", 1.0, 2.0)
    with pytest.raises(ValueError):
        dc.find_crossing(2, "thermal", 0.05, 1.0)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CV_ENTANGLER_THREADS", "3")
    assert dc.worker_count() == 3
    monkeypatch.setenv("CV_ENTANGLER_THREADS", "-1")
    with pytest.raises(ValueError):
        dc.worker_count()


@pytest.mark.parametrize("nbar", [1e-10, 3e-12])
def test_tiny_photon_numbers_are_vacuum(nbar):
    for protocol in pr.Protocol:
        result = dc.optimize_capacity(protocol, nbar)
        assert result.squeezing == 0.0
        assert result.nbar == pytest.approx(nbar, rel=1e-12)
        assert result.capacity == pytest.approx(dc.baseline_capacities(nbar)[0], rel=1e-12)
