"""Link-level channel model: path loss, multipath channel, beam search, SINR.

Powers are carried in dB(m) through the link budget and converted to the
linear domain only where they add (noise plus interference).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, InputError

SPEED_OF_LIGHT = 299_792_458.0
COHERENCE_FACTOR = 0.423


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x_lin):
    """Linear power to dB; zero maps to -inf without a warning."""
    x = np.asarray(x_lin, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathLossParams:
    floating_intercept_db: float = 72.0
    pathloss_exponent: float = 2.92
    shadow_sigma_db: float = 8.2

    def __post_init__(self):
        if not self.shadow_sigma_db >= 0:
            raise ConfigError("shadow_sigma_db must be >= 0")
        if not self.pathloss_exponent > 0:
            raise ConfigError("pathloss_exponent must be > 0")


@dataclass
class ShadowField:
    """Per-link shadowing in dB, drawn once and then frozen."""

    sigma_db: float
    values: dict = field(default_factory=dict)

    @classmethod
    def draw(cls, gnb_ids, ue_ids, sigma_db, rng):
        gnb_ids = list(gnb_ids)
        ue_ids = list(ue_ids)
        samples = rng.normal(0.0, sigma_db, size=(len(gnb_ids), len(ue_ids)))
        values = {
            (b, u): float(samples[i, j])
            for i, b in enumerate(gnb_ids)
            for j, u in enumerate(ue_ids)
        }
        return cls(sigma_db, values)

    def get(self, gnb_id, ue_id) -> float:
        return self.values[(gnb_id, ue_id)]


@dataclass(frozen=True)
class AntennaArrayConfig:
    n_tx: int = 16
    n_rx: int = 4
    element_spacing: float = 0.5

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise InputError("array sizes must be >= 1")
        if not self.element_spacing > 0:
            raise InputError("element_spacing must be > 0")


@dataclass(frozen=True)
class SubpathSet:
    """Small-scale geometry of every gNB->UE link.

    All arrays are shaped ``(n_gnbs, n_subpaths)``; angles are radians.
    """

    gains: np.ndarray
    aoa_azimuth: np.ndarray
    aoa_elevation: np.ndarray
    aod_azimuth: np.ndarray
    aod_elevation: np.ndarray

    @property
    def subpath_count(self) -> int:
        return self.gains.shape[1]

    @property
    def gnb_count(self) -> int:
        return self.gains.shape[0]

    def with_gains(self, gains) -> "SubpathSet":
        return SubpathSet(
            np.asarray(gains, dtype=complex),
            self.aoa_azimuth,
            self.aoa_elevation,
            self.aod_azimuth,
            self.aod_elevation,
        )


@dataclass(frozen=True)
class ChannelMatrix:
    entries: np.ndarray  # (n_rx, n_tx) complex
    timestamp: int = 0


@dataclass(frozen=True)
class BeamCodebook:
    tx_beams: np.ndarray  # (K_tx, n_tx), one unit-norm beam per row
    rx_beams: np.ndarray  # (K_rx, n_rx)

    def __post_init__(self):
        if len(self.tx_beams) == 0 or len(self.rx_beams) == 0:
            raise ConfigError("beam codebook must not be empty")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    combined_antenna_gain_db: float
    subpath_attenuation_db: float
    pathloss_db: float
    rx_power_dbm: float


@dataclass(frozen=True)
class SinrReport:
    sinr_db: float
    interference_dbm: float
    noise_dbm: float
    satisfied: bool


@dataclass(frozen=True)
class FadingProcess:
    correlation_coefficient: float
    doppler_hz: float

    @classmethod
    def from_speed(cls, speed_mps, carrier_hz, slot_duration_s):
        doppler = speed_mps * carrier_hz / SPEED_OF_LIGHT
        if doppler <= 0.0:
            return cls(1.0, 0.0)
        coherence_time = COHERENCE_FACTOR / doppler
        return cls(math.exp(-slot_duration_s / coherence_time), doppler)


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def path_loss(params: PathLossParams, distance: float, shadow_db: float = 0.0) -> float:
    """Log-distance path loss in dB; distances under 1 m are clamped to 1 m."""
    if not math.isfinite(distance) or distance < 0:
        raise InputError(f"distance must be finite and non-negative, got {distance!r}")
    d = max(distance, 1.0)
    return (
        params.floating_intercept_db
        + params.pathloss_exponent * 10.0 * math.log10(d)
        + shadow_db
    )


def array_response(config: AntennaArrayConfig, azimuth: float, elevation: float = 0.0,
                   side: str = "tx") -> np.ndarray:
    """Uniform linear array steering vector (unnormalized).

    Elevation is accepted for signature symmetry but a linear array along
    one axis does not resolve it.
    """
    if side == "tx":
        n = config.n_tx
    elif side == "rx":
        n = config.n_rx
    else:
        raise InputError(f"side must be 'tx' or 'rx', got {side!r}")
    m = np.arange(n)
    return np.exp(1j * 2.0 * np.pi * config.element_spacing * m * np.sin(azimuth))


def channel_matrix(subpaths: SubpathSet, config: AntennaArrayConfig, gnb: int = 0,
                   timestamp: int = 0) -> ChannelMatrix:
    """Per-link multipath channel ``H_b = L^-1/2 * sum_l g_l u_rx u_tx^H``."""
    L = subpaths.subpath_count
    h = np.zeros((config.n_rx, config.n_tx), dtype=complex)
    for l in range(L):
        u_rx = array_response(config, subpaths.aoa_azimuth[gnb, l],
                              subpaths.aoa_elevation[gnb, l], "rx")
        u_tx = array_response(config, subpaths.aod_azimuth[gnb, l],
                              subpaths.aod_elevation[gnb, l], "tx")
        h += subpaths.gains[gnb, l] * np.outer(u_rx, u_tx.conj())
    h /= math.sqrt(L)
    if h.shape != (config.n_rx, config.n_tx):
        raise ValueError(f"channel shape {h.shape} does not match array config")
    return ChannelMatrix(h, timestamp)


def complex_normal(rng, size) -> np.ndarray:
    """CN(0, 1) samples; real part drawn before imaginary part."""
    size = (size,) if np.isscalar(size) else tuple(size)
    z = rng.standard_normal(size + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def draw_subpaths(rng, n_gnbs: int, n_subpaths: int = 2,
                  max_elevation: float = math.pi / 6) -> SubpathSet:
    """Random geometry: azimuths uniform on [-pi, pi], elevations on +-max_elevation."""
    if n_subpaths < 1:
        raise InputError("subpath count must be >= 1")
    shape = (n_gnbs, n_subpaths)
    angles = rng.uniform(-1.0, 1.0, size=shape + (4,))
    return SubpathSet(
        gains=complex_normal(rng, shape),
        aoa_azimuth=angles[..., 0] * math.pi,
        aoa_elevation=angles[..., 1] * max_elevation,
        aod_azimuth=angles[..., 2] * math.pi,
        aod_elevation=angles[..., 3] * max_elevation,
    )


def evolve_fading(subpaths: SubpathSet, process: FadingProcess, rng=None,
                  innovations=None) -> SubpathSet:
    """One AR(1) step of the complex gains; angles are left untouched.

    ``innovations`` lets a caller supply the CN(0, 1) draws directly.
    """
    rho = process.correlation_coefficient
    if not 0.0 <= rho <= 1.0:
        raise InputError(f"correlation coefficient must lie in [0, 1], got {rho}")
    if rho == 1.0:
        return subpaths.with_gains(subpaths.gains.copy())
    if innovations is None:
        innovations = complex_normal(rng, subpaths.gains.shape)
    sq = math.sqrt(1.0 - rho * rho)
    return subpaths.with_gains(rho * subpaths.gains + sq * innovations)


def dft_codebook(n: int) -> np.ndarray:
    """n-point DFT beams, one unit-norm beam per row; beam 0 is broadside."""
    if n < 1:
        raise InputError("codebook size must be >= 1")
    m = np.arange(n)
    return np.exp(1j * 2.0 * np.pi * np.outer(m, m) / n) / math.sqrt(n)


def default_codebook(config: AntennaArrayConfig) -> BeamCodebook:
    return BeamCodebook(dft_codebook(config.n_tx), dft_codebook(config.n_rx))


def beamforming_gain(h: ChannelMatrix, codebook: BeamCodebook):
    """Exhaustive beam-pair search.

    Returns ``(gain_db, tx_index, rx_index)`` for the pair maximizing
    ``|w_rx^H H w_tx|^2``; ties go to the lowest tx index, then rx index.
    """
    H = np.asarray(h.entries if isinstance(h, ChannelMatrix) else h)
    tx = np.asarray(codebook.tx_beams)
    rx = np.asarray(codebook.rx_beams)
    if tx.shape[1] != H.shape[1] or rx.shape[1] != H.shape[0]:
        raise ConfigError("codebook dimensions do not match the channel matrix")
    resp = rx.conj() @ H @ tx.T  # (K_rx, K_tx)
    power = (resp.real ** 2 + resp.imag ** 2).T  # tx-major for tie-breaking
    k = int(np.argmax(power))
    j_tx, i_rx = divmod(k, power.shape[1])
    return lin_to_db(power[j_tx, i_rx]), j_tx, i_rx


def long_term_beamforming_gain(subpaths: SubpathSet, config: AntennaArrayConfig,
                               codebook: BeamCodebook, gnb: int = 0):
    """Beam pair maximizing the fading-averaged gain ``E|w_rx^H H w_tx|^2``.

    The subpath gains are independent with unit power, so the average is
    ``(1/L) * sum_l |w_rx^H u_rx,l|^2 * |u_tx,l^H w_tx|^2`` and depends on
    the geometry only. Returns ``(gain_db, tx_index, rx_index)``.
    """
    L = subpaths.subpath_count
    power = np.zeros((len(codebook.tx_beams), len(codebook.rx_beams)))
    for l in range(L):
        u_rx = array_response(config, subpaths.aoa_azimuth[gnb, l], subpaths.aoa_elevation[gnb, l], "rx")
        u_tx = array_response(config, subpaths.aod_azimuth[gnb, l], subpaths.aod_elevation[gnb, l], "tx")
        a_rx = np.abs(codebook.rx_beams.conj() @ u_rx) ** 2
        a_tx = np.abs(codebook.tx_beams @ u_tx.conj()) ** 2
        power += np.outer(a_tx, a_rx)
    power /= L
    k = int(np.argmax(power))
    j_tx, i_rx = divmod(k, power.shape[1])
    return lin_to_db(power[j_tx, i_rx]), j_tx, i_rx


def received_power(tx_power_dbm, psi_db, delta_db, pathloss_db) -> LinkBudget:
    rx = tx_power_dbm + psi_db - delta_db - pathloss_db
    return LinkBudget(tx_power_dbm, psi_db, delta_db, pathloss_db, rx)


def noise_power(bandwidth_hz, noise_density_dbm_per_hz=-174.0) -> float:
    if not bandwidth_hz > 0:
        raise InputError("bandwidth must be > 0")
    return noise_density_dbm_per_hz + 10.0 * math.log10(bandwidth_hz)


def sinr(rx_power_dbm, interference_dbm, noise_dbm, min_sinr_db=-10.0) -> SinrReport:
    denom = float(db_to_lin(interference_dbm) + db_to_lin(noise_dbm))
    value = rx_power_dbm - lin_to_db(denom)
    return SinrReport(value, interference_dbm, noise_dbm, bool(value >= min_sinr_db))


def interference_at(aligned_rx_dbm: Mapping[int, float], active_gnbs: Iterable[int],
                    serving_cluster: Iterable[int], sidelobe_penalty_db: float = 20.0) -> float:
    """Summed interference in dBm from active gNBs outside the serving set.

    Each interferer contributes its beam-aligned received power reduced by
    the sidelobe penalty. No interferers gives ``-inf``.
    """
    serving = set(serving_cluster)
    total = 0.0
    for b in sorted(set(active_gnbs) - serving):
        total += float(db_to_lin(aligned_rx_dbm[b] - sidelobe_penalty_db))
    return lin_to_db(total)
