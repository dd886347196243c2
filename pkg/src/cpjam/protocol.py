"""Two-phase amplify-and-forward link with destination CP jamming.

Phase 1: the source broadcasts one CP-OFDM block. The destination listens
on the direct link and, at the instant the block reaches it, transmits a
Gaussian burst as long as the cyclic prefix. Propagation delay makes the
burst land partly inside the relay's FFT window, where it spreads across
every subcarrier.

Phase 2: the relay forwards its (jammed) observation after per-subcarrier
AAF normalization. The destination knows the burst and all channels, so it
subtracts the jamming contribution and combines both copies with MRC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import dsp
from .channel import (
    SPEED_OF_LIGHT,
    ChannelRealization,
    LinkNoise,
    PathlossParams,
    amplitude_from_pathloss,
    apply_channel,
    awgn,
    cfr_from_taps,
    dbm_to_watts,
    draw_rayleigh_taps,
    pathloss_db,
)


@dataclass(frozen=True)
class Scenario:
    """Geometry, powers and waveform parameters for one cooperative link.

    The relay sits on the source-destination segment, so the relay-destination
    distance is ``d_sd_m - d_sr_m``. ``pj_dbm`` may be ``-inf`` for a silent
    jammer.
    """

    d_sd_m: float = 1000.0
    d_sr_m: float = 500.0
    p1_dbm: float = 23.0
    p2_dbm: float = 23.0
    pj_dbm: float = 23.0
    fc_ghz: float = 2.0
    sample_rate_hz: float = 3.84e6
    n_fft: int = 256
    cp_len: int = 32
    cir_len: int = 32
    shadow_sigma_db: float = 4.0
    jam_enabled: bool = True
    jam_offset_override_samples: Optional[int] = None
    n0_dbm_per_hz: float = -174.0
    decay_span_db: float = 20.0
    noise_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.d_sr_m < self.d_sd_m:
            raise ValueError(f"need 0 < d_sr_m < d_sd_m, got d_sr_m={self.d_sr_m}, d_sd_m={self.d_sd_m}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.cir_len < 1:
            raise ValueError(f"cir_len must be >= 1, got {self.cir_len}")
        if self.cp_len < self.cir_len - 1:
            raise ValueError(f"cp_len={self.cp_len} too short for cir_len={self.cir_len}")
        if self.jam_offset_override_samples is not None and self.jam_offset_override_samples < 0:
            raise ValueError("jam_offset_override_samples must be >= 0")
        # validates n_fft / cp_len
        dsp.OfdmParams(self.n_fft, self.cp_len)
        PathlossParams(self.fc_ghz, self.shadow_sigma_db)

    @property
    def d_rd_m(self) -> float:
        return self.d_sd_m - self.d_sr_m

    @property
    def ofdm(self) -> dsp.OfdmParams:
        return dsp.OfdmParams(self.n_fft, self.cp_len)

    @property
    def block_len(self) -> int:
        return self.n_fft + self.cp_len

    @property
    def p1_w(self) -> float:
        return dbm_to_watts(self.p1_dbm)

    @property
    def p2_w(self) -> float:
        return dbm_to_watts(self.p2_dbm)

    @property
    def pj_w(self) -> float:
        return dbm_to_watts(self.pj_dbm)

    @property
    def noise_w(self) -> float:
        """Nominal receiver noise power per sample (and per orthonormal bin)."""
        return LinkNoise(self.n0_dbm_per_hz, self.sample_rate_hz).power_w

    @property
    def injected_noise_w(self) -> float:
        return self.noise_w if self.noise_enabled else 0.0

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class TrialChannels:
    ch_sd: ChannelRealization
    ch_sr: ChannelRealization
    # reused for the destination -> relay jamming path (reciprocity)
    ch_rd: ChannelRealization


@dataclass
class TrialObservation:
    bits_tx: np.ndarray
    bits_relay_hat: np.ndarray
    bits_dest_p1_hat: np.ndarray
    bits_dest_mrc_hat: np.ndarray


class Phase1Output(NamedTuple):
    y_dest_p1: np.ndarray
    y_relay: np.ndarray
    jam_ref: np.ndarray


@dataclass(frozen=True)
class LinkResponses:
    """Per-subcarrier responses the genie-aided receivers use."""

    h_sd: np.ndarray
    h_sr: np.ndarray
    h_rd: np.ndarray
    beta: np.ndarray = field(repr=False)


def draw_trial_channels(scenario: Scenario, rng: np.random.Generator, shadowing: bool = True) -> TrialChannels:
    """One independent multipath draw and shadowing term per link.

    Shadowing normals are always drawn, and drawn before the taps, so the
    same seed yields the same shadowing whatever the CIR length or the
    shadowing switch.
    """
    pl = PathlossParams(scenario.fc_ghz, scenario.shadow_sigma_db)
    z = rng.standard_normal(3)
    out = []
    for d, zi in zip((scenario.d_sd_m, scenario.d_sr_m, scenario.d_rd_m), z):
        taps = draw_rayleigh_taps(scenario.cir_len, scenario.decay_span_db, rng)
        shadow = pl.shadow_sigma_db * zi if shadowing else 0.0
        out.append(ChannelRealization(taps, amplitude_from_pathloss(pathloss_db(d, pl, shadow))))
    return TrialChannels(*out)


def aaf_gain(h_sr, p1_w: float, n0_w: float) -> np.ndarray:
    """Relay normalization 1/sqrt(P1 |H_sr(k)|^2 + N0) per subcarrier."""
    return 1.0 / np.sqrt(p1_w * np.abs(h_sr) ** 2 + n0_w)


def link_responses(channels: TrialChannels, scenario: Scenario) -> LinkResponses:
    n = scenario.n_fft
    h_sr = cfr_from_taps(channels.ch_sr, n)
    return LinkResponses(
        h_sd=cfr_from_taps(channels.ch_sd, n),
        h_sr=h_sr,
        h_rd=cfr_from_taps(channels.ch_rd, n),
        beta=aaf_gain(h_sr, scenario.p1_w, scenario.noise_w),
    )


def jam_offset_samples(scenario: Scenario) -> int:
    """Delay from the source block's arrival at the relay to the burst's arrival."""
    if scenario.jam_offset_override_samples is not None:
        return int(scenario.jam_offset_override_samples)
    t_d = (scenario.d_sd_m + scenario.d_rd_m - scenario.d_sr_m) / SPEED_OF_LIGHT
    return int(math.floor(t_d * scenario.sample_rate_hz + 0.5))


def generate_jamming(cp_len: int, pj_watts: float, rng: np.random.Generator) -> np.ndarray:
    if pj_watts < 0:
        raise ValueError(f"jamming power must be >= 0, got {pj_watts}")
    if pj_watts == 0:
        return np.zeros(cp_len, dtype=np.complex128)
    return awgn(np.zeros(cp_len, dtype=np.complex128), pj_watts, rng)


def jam_at_relay(jam_ref: np.ndarray, ch_rd: ChannelRealization, offset: int, length: int) -> np.ndarray:
    """The burst as seen in the relay's ``length``-sample block window.

    The burst reaches the relay as its cyclic convolution with the
    relay-destination taps, so it keeps its ``len(jam_ref)``-sample span and
    a stationary per-sample power of pj times the link gain.
    """
    out = np.zeros(length, dtype=np.complex128)
    m = jam_ref.size
    if m == 0:
        return out
    full = apply_channel(jam_ref, ch_rd)
    rx = full[:m].copy()
    for lo in range(m, full.size, m):
        chunk = full[lo:lo + m]
        rx[: chunk.size] += chunk
    hi = min(offset + rx.size, length)
    if offset < hi:
        out[offset:hi] = rx[: hi - offset]
    return out


def _inject(y: np.ndarray, burst: np.ndarray, offset: int, n: int) -> None:
    hi = min(offset + n, y.size)
    if offset < hi:
        y[offset:hi] += burst[offset:hi]


def source_block(bits, scenario: Scenario) -> np.ndarray:
    return math.sqrt(scenario.p1_w) * dsp.ofdm_modulate(dsp.qpsk_modulate(bits), scenario.ofdm)


def phase1(
    bits,
    scenario: Scenario,
    channels: TrialChannels,
    rng: np.random.Generator,
    jam_rng: Optional[np.random.Generator] = None,
) -> Phase1Output:
    """Broadcast phase. Noise is drawn from ``rng`` (destination first, then
    relay); the burst comes from ``jam_rng`` so that jam-on and jam-off runs
    see identical noise."""
    bits = np.asarray(bits)
    if bits.size != 2 * scenario.n_fft:
        raise ValueError(f"expected {2 * scenario.n_fft} bits, got {bits.size}")
    win = scenario.block_len
    s = source_block(bits, scenario)
    n0 = scenario.injected_noise_w
    y_dest = awgn(apply_channel(s, channels.ch_sd)[:win], n0, rng)
    y_relay = awgn(apply_channel(s, channels.ch_sr)[:win], n0, rng)
    if scenario.jam_enabled:
        jam_ref = generate_jamming(scenario.cp_len, scenario.pj_w, rng if jam_rng is None else jam_rng)
        offset = jam_offset_samples(scenario)
        burst = jam_at_relay(jam_ref, channels.ch_rd, offset, win)
        _inject(y_relay, burst, offset, jam_ref.size)
    else:
        jam_ref = np.zeros(scenario.cp_len, dtype=np.complex128)
    return Phase1Output(y_dest, y_relay, jam_ref)


def zf_equalize(y, h) -> np.ndarray:
    # bins with an exactly-null response pass through unequalized
    h = np.asarray(h)
    safe = np.where(h == 0, 1.0, h)
    return np.asarray(y) / safe


def relay_eavesdrop(
    y_relay, channels: TrialChannels, scenario: Scenario, resp: Optional[LinkResponses] = None
) -> np.ndarray:
    """Best-case interception: perfect CSI zero-forcing and hard decisions."""
    resp = resp or link_responses(channels, scenario)
    y = dsp.ofdm_demodulate(y_relay, scenario.ofdm)
    return dsp.qpsk_demodulate(zf_equalize(y, math.sqrt(scenario.p1_w) * resp.h_sr))


def relay_aaf_forward(
    y_relay, channels: TrialChannels, scenario: Scenario, resp: Optional[LinkResponses] = None
) -> np.ndarray:
    """Per-subcarrier AAF: FFT, scale bin k by sqrt(P2)*beta(k), IFFT, re-add CP."""
    resp = resp or link_responses(channels, scenario)
    y = dsp.ofdm_demodulate(y_relay, scenario.ofdm)
    return dsp.ofdm_modulate(math.sqrt(scenario.p2_w) * resp.beta * y, scenario.ofdm)


def phase2(relay_tx, channels: TrialChannels, scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    win = scenario.block_len
    return awgn(apply_channel(relay_tx, channels.ch_rd)[:win], scenario.injected_noise_w, rng)


def jamming_at_destination(
    jam_ref, channels: TrialChannels, scenario: Scenario, resp: Optional[LinkResponses] = None
) -> np.ndarray:
    """Frequency-domain jamming term the relay forwarded, as the destination
    receives it in phase 2."""
    resp = resp or link_responses(channels, scenario)
    burst = jam_at_relay(np.asarray(jam_ref), channels.ch_rd, jam_offset_samples(scenario), scenario.block_len)
    j_win = dsp.ofdm_demodulate(burst, scenario.ofdm)
    return resp.h_rd * math.sqrt(scenario.p2_w) * resp.beta * j_win


def cancel_jamming(
    y_dest_p2_freq, jam_ref, channels: TrialChannels, scenario: Scenario, resp: Optional[LinkResponses] = None
) -> np.ndarray:
    y = np.asarray(y_dest_p2_freq)
    if not np.any(jam_ref):
        return y.copy()
    return y - jamming_at_destination(jam_ref, channels, scenario, resp)


def mrc_combine(y1, y2, h1, h2, var1, var2_per_bin) -> np.ndarray:
    """Maximal ratio combining of two branches with per-bin noise variances."""
    y1, y2, h1, h2 = (np.asarray(a) for a in (y1, y2, h1, h2))
    if not (y1.shape == y2.shape == h1.shape == h2.shape):
        raise ValueError("all branches must have the same length")
    var2 = np.broadcast_to(np.asarray(var2_per_bin, dtype=np.float64), y1.shape)
    if np.any(np.asarray(var1) <= 0) or np.any(var2 <= 0):
        raise ValueError("noise variances must be positive")
    num = np.conj(h1) * y1 / var1 + np.conj(h2) * y2 / var2
    den = np.abs(h1) ** 2 / var1 + np.abs(h2) ** 2 / var2
    out = np.zeros_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def destination_decode(
    y_dest_p1, y_dest_p2, jam_ref, channels: TrialChannels, scenario: Scenario, resp: Optional[LinkResponses] = None
):
    """Returns (direct-link-only bits, MRC bits)."""
    ofdm = scenario.ofdm
    resp = resp or link_responses(channels, scenario)
    n0 = scenario.noise_w
    p1, p2 = scenario.p1_w, scenario.p2_w

    y1 = dsp.ofdm_demodulate(y_dest_p1, ofdm)
    h1 = math.sqrt(p1) * resp.h_sd
    bits_p1 = dsp.qpsk_demodulate(zf_equalize(y1, h1))

    y2 = cancel_jamming(dsp.ofdm_demodulate(y_dest_p2, ofdm), jam_ref, channels, scenario, resp)
    h2 = math.sqrt(p1 * p2) * resp.beta * resp.h_rd * resp.h_sr
    var2 = p2 * np.abs(resp.h_rd) ** 2 * resp.beta ** 2 * n0 + n0
    bits_mrc = dsp.qpsk_demodulate(mrc_combine(y1, y2, h1, h2, n0, var2))
    return bits_p1, bits_mrc


def simulate_block(
    bits,
    scenario: Scenario,
    channels: TrialChannels,
    noise_rng: np.random.Generator,
    jam_rng: Optional[np.random.Generator] = None,
) -> TrialObservation:
    """One OFDM block end to end through both phases."""
    resp = link_responses(channels, scenario)
    y_dest_p1, y_relay, jam_ref = phase1(bits, scenario, channels, noise_rng, jam_rng)
    bits_relay = relay_eavesdrop(y_relay, channels, scenario, resp)
    relay_tx = relay_aaf_forward(y_relay, channels, scenario, resp)
    y_dest_p2 = phase2(relay_tx, channels, scenario, noise_rng)
    bits_p1, bits_mrc = destination_decode(y_dest_p1, y_dest_p2, jam_ref, channels, scenario, resp)
    return TrialObservation(np.asarray(bits, dtype=np.uint8), bits_relay, bits_p1, bits_mrc)
