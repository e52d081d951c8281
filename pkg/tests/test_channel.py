import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_sdn import channel as ch
from mmwave_sdn.errors import ConfigError, InputError

import oracles

PL = ch.PathLossParams(72.0, 2.92, 8.2)
finite = st.floats(-200, 200, allow_nan=False)


def one_link(gains, aoa, aod):
    z = np.zeros((1, len(gains)))
    return ch.SubpathSet(np.array([gains], dtype=complex), np.array([aoa], float), z,
                         np.array([aod], float), z.copy())


# -- path loss ---------------------------------------------------------------

@pytest.mark.parametrize("d, eta, want", [(1, 0, 72.0), (100, 0, 130.4), (100, 8.2, 138.6)])
def test_path_loss_examples(d, eta, want):
    assert ch.path_loss(PL, d, eta) == pytest.approx(want, abs=1e-9)


def test_path_loss_clamps_below_one_metre():
    assert ch.path_loss(PL, 0.0) == ch.path_loss(PL, 1.0) == 72.0
    assert ch.path_loss(PL, 0.3) == 72.0


@pytest.mark.parametrize("d", [-1.0, math.inf, math.nan])
def test_path_loss_rejects_bad_distance(d):
    with pytest.raises(InputError):
        ch.path_loss(PL, d)


@given(st.floats(10, 1e6), st.floats(-30, 30))
def test_path_loss_decade_slope(d, eta):
    assert ch.path_loss(PL, d, eta) - ch.path_loss(PL, d / 10, eta) == pytest.approx(29.2, abs=1e-9)


def test_path_loss_params_validation():
    with pytest.raises(ConfigError):
        ch.PathLossParams(72, 0.0, 8.2)
    with pytest.raises(ConfigError):
        ch.PathLossParams(72, 2.0, -1.0)


def test_shadow_field_is_frozen():
    field = ch.ShadowField.draw([0, 1, 2], [0], 8.2, np.random.default_rng(3))
    assert field.get(1, 0) == field.get(1, 0)
    again = ch.ShadowField.draw([0, 1, 2], [0], 8.2, np.random.default_rng(3))
    assert again.values == field.values


# -- arrays, channel matrix, beams ------------------------------------------

def test_array_response_examples():
    cfg = ch.AntennaArrayConfig(n_tx=1, n_rx=4)
    assert np.allclose(ch.array_response(cfg, 1.234, 0.0, "tx"), [1])
    cfg2 = ch.AntennaArrayConfig(n_tx=2, n_rx=4)
    assert np.allclose(ch.array_response(cfg2, 0.0, 0.0, "tx"), [1, 1])
    assert np.allclose(ch.array_response(cfg, math.pi / 2, 0.0, "rx"), [1, -1, 1, -1], atol=1e-12)


def test_array_response_ignores_elevation():
    cfg = ch.AntennaArrayConfig(4, 4)
    assert np.array_equal(ch.array_response(cfg, 0.7, 0.0, "rx"), ch.array_response(cfg, 0.7, 0.4, "rx"))


def test_array_config_rejects_empty_array():
    with pytest.raises(InputError):
        ch.AntennaArrayConfig(n_tx=0)


def test_channel_matrix_trivial_cases():
    cfg = ch.AntennaArrayConfig(1, 1)
    assert np.allclose(ch.channel_matrix(one_link([1], [0.3], [0.2]), cfg).entries, [[1]])
    cancel = one_link([1, -1], [0.3, 0.3], [0.2, 0.2])
    assert np.allclose(ch.channel_matrix(cancel, cfg).entries, [[0]])


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_channel_matrix_matches_triple_loop(n_tx, n_rx, L, seed):
    sp = ch.draw_subpaths(np.random.default_rng(seed), 1, L)
    cfg = ch.AntennaArrayConfig(n_tx, n_rx)
    got = ch.channel_matrix(sp, cfg).entries
    want = np.array(oracles.channel_triple_loop(list(sp.gains[0]), list(sp.aoa_azimuth[0]),
                                                list(sp.aod_azimuth[0]), n_rx, n_tx))
    assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))


def test_dft_codebook_is_unitary():
    for n in (1, 2, 4, 16):
        W = ch.dft_codebook(n)
        assert np.allclose(W @ W.conj().T, np.eye(n))


def test_beamforming_gain_examples():
    one = ch.BeamCodebook(np.array([[1 + 0j]]), np.array([[1 + 0j]]))
    assert ch.beamforming_gain(ch.ChannelMatrix(np.array([[1 + 0j]])), one) == (0.0, 0, 0)
    cb = ch.BeamCodebook(ch.dft_codebook(2), ch.dft_codebook(2))
    gain, tx, rx = ch.beamforming_gain(ch.ChannelMatrix(np.ones((2, 2), complex)), cb)
    assert gain == pytest.approx(10 * math.log10(4), abs=1e-12)
    assert (tx, rx) == (0, 0)


def test_beamforming_gain_tie_break_lowest_tx_then_rx():
    # zero channel: every pair ties at -inf
    cb = ch.BeamCodebook(ch.dft_codebook(4), ch.dft_codebook(2))
    assert ch.beamforming_gain(np.zeros((2, 4), complex), cb)[1:] == (0, 0)


def test_empty_codebook_is_config_error():
    with pytest.raises(ConfigError):
        ch.BeamCodebook(np.zeros((0, 4), complex), ch.dft_codebook(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi))
def test_beam_search_matches_brute_force_and_phase_invariance(seed, phase):
    rng = np.random.default_rng(seed)
    H = ch.complex_normal(rng, (4, 4))
    cb = ch.BeamCodebook(ch.dft_codebook(4), ch.dft_codebook(4))
    gain, tx, rx = ch.beamforming_gain(ch.ChannelMatrix(H), cb)
    p, t, r = oracles.beam_scan(H.tolist(), 4, 4)
    assert gain == pytest.approx(10 * math.log10(p), abs=1e-9)
    assert (tx, rx) == (t, r)
    rotated = ch.beamforming_gain(ch.ChannelMatrix(H * np.exp(1j * phase)), cb)[0]
    assert rotated == pytest.approx(gain, abs=1e-9)


def test_long_term_gain_is_fading_average():
    rng = np.random.default_rng(11)
    sp = ch.draw_subpaths(rng, 1, 2)
    cfg = ch.AntennaArrayConfig(8, 4)
    cb = ch.default_codebook(cfg)
    gain, tx, rx = ch.long_term_beamforming_gain(sp, cfg, cb)
    # Monte Carlo over independent unit-power gains at the chosen beam pair
    g = ch.complex_normal(rng, (40000, 2))
    acc = 0.0
    for k in range(len(g)):
        H = ch.channel_matrix(sp.with_gains(g[k:k + 1]), cfg).entries
        acc += abs(cb.rx_beams[rx].conj() @ H @ cb.tx_beams[tx]) ** 2
    assert 10 * math.log10(acc / len(g)) == pytest.approx(gain, abs=0.1)


# -- fading ----------------------------------------------------------------

def test_fading_process_from_speed():
    f = ch.FadingProcess.from_speed(25.0, 28e9, 1e-3)
    fd = 25.0 * 28e9 / 299_792_458.0
    assert f.doppler_hz == pytest.approx(fd)
    assert f.correlation_coefficient == pytest.approx(math.exp(-1e-3 * fd / 0.423))
    assert ch.FadingProcess.from_speed(0.0, 28e9, 1e-3).correlation_coefficient == 1.0


def test_evolve_fading_degenerate_cases():
    rng = np.random.default_rng(0)
    sp = ch.draw_subpaths(rng, 3, 2)
    frozen = ch.evolve_fading(sp, ch.FadingProcess(1.0, 0.0), rng)
    assert np.array_equal(frozen.gains, sp.gains)
    w = ch.complex_normal(rng, sp.gains.shape)
    fresh = ch.evolve_fading(sp, ch.FadingProcess(0.0, 1.0), innovations=w)
    assert np.array_equal(fresh.gains, w)
    assert np.array_equal(fresh.aoa_azimuth, sp.aoa_azimuth)


def test_evolve_fading_rejects_bad_rho():
    sp = ch.draw_subpaths(np.random.default_rng(0), 1, 1)
    with pytest.raises(InputError):
        ch.evolve_fading(sp, ch.FadingProcess(1.5, 0.0), np.random.default_rng(0))


@settings(max_examples=15, deadline=None, derandomize=True)
@given(st.floats(0.0, 1.0))
def test_fading_power_is_stationary(rho):
    rng = np.random.default_rng(5)
    sp = ch.draw_subpaths(rng, 4000, 1)
    proc = ch.FadingProcess(rho, 1.0)
    total = 0.0
    for _ in range(100):
        sp = ch.evolve_fading(sp, proc, rng)
        total += float(np.mean(np.abs(sp.gains) ** 2))
    assert 0.95 <= total / 100 <= 1.05


# -- link budget -----------------------------------------------------------

@pytest.mark.parametrize("args, want", [((0, 0, 0, 0), 0.0), ((37, 0, 0, 130.4), -93.4),
                                        ((37, 20, 3, 130.4), -76.4)])
def test_received_power_examples(args, want):
    assert ch.received_power(*args).rx_power_dbm == pytest.approx(want, abs=1e-9)


@given(finite, finite, finite, finite)
def test_received_power_db_identity(pt, psi, delta, pl):
    b = ch.received_power(pt, psi, delta, pl)
    assert b.rx_power_dbm + pl + delta - psi == pytest.approx(pt, abs=1e-9)


@pytest.mark.parametrize("bw, want", [(1.0, -174.0), (1e9, -84.0), (1e7, -104.0)])
def test_noise_power_examples(bw, want):
    assert ch.noise_power(bw, -174.0) == pytest.approx(want, abs=1e-9)


def test_noise_power_needs_positive_bandwidth():
    with pytest.raises(InputError):
        ch.noise_power(0.0)


@pytest.mark.parametrize("rx, i, n, want", [(-84, -math.inf, -84, 0.0), (-74, -math.inf, -84, 10.0),
                                            (-84, -84, -84, -3.010299956639812)])
def test_sinr_examples(rx, i, n, want):
    rep = ch.sinr(rx, i, n, -10.0)
    assert rep.sinr_db == pytest.approx(want, abs=1e-9)
    assert rep.sinr_db == pytest.approx(oracles.sinr_db(rx, i, n), abs=1e-9)
    assert rep.satisfied


def test_sinr_threshold_is_inclusive():
    assert ch.sinr(-94.0, -math.inf, -84.0, -10.0).satisfied
    assert not ch.sinr(-94.001, -math.inf, -84.0, -10.0).satisfied


@given(st.floats(-150, -30), st.floats(-150, -30), st.floats(-150, -30), st.floats(0.01, 20))
def test_sinr_monotone(rx, i, n, step):
    base = ch.sinr(rx, i, n).sinr_db
    assert ch.sinr(rx + step, i, n).sinr_db > base
    assert ch.sinr(rx, i + step, n).sinr_db < base
    assert ch.sinr(rx, i, n + step).sinr_db < base


def test_interference_examples():
    assert ch.interference_at({0: -60.0}, [0], [0]) == -math.inf
    assert ch.interference_at({0: -60.0, 1: -90.0}, [0, 1], [0], 20.0) == pytest.approx(-110.0)
    two = ch.interference_at({0: -90.0, 1: -90.0, 2: -50.0}, [0, 1], [2], 20.0)
    assert two == pytest.approx(-106.98970004336019, abs=1e-9)
