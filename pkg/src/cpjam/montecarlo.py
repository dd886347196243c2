"""Seeded BER campaigns over relay position, jamming power and CP ratio.

Every trial runs a jam-on and a jam-off arm. Both arms draw data, channels
and noise from the same shared seed and differ only in the jamming stream,
so the security gap is measured on common random numbers. Trials reduce to
integer error counts, which makes the result independent of worker count
and scheduling.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import dsp
from .channel import awgn
from .protocol import Scenario, TrialObservation, draw_trial_channels, simulate_block

U64 = (1 << 64) - 1
SWEEP_AXES = ("relay_position", "pj_ratio", "cp_ratio")


class Observer(str, Enum):
    RELAY_NOJAM = "relay_nojam"
    RELAY_JAM = "relay_jam"
    DEST_P1 = "dest_p1"
    DEST_MRC = "dest_mrc"


OBSERVERS = tuple(Observer)


@dataclass(frozen=True)
class BerRecord:
    sweep_point: float
    observer: str
    bit_errors: int
    bits_total: int

    def __post_init__(self):
        if not 0 <= self.bit_errors <= self.bits_total:
            raise ValueError(f"bit_errors={self.bit_errors} outside [0, {self.bits_total}]")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total

    @property
    def ci95_halfwidth(self) -> float:
        p = self.ber
        return 1.96 * math.sqrt(p * (1.0 - p) / self.bits_total)

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_ci(self.bit_errors, self.bits_total)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario = field(default_factory=Scenario)
    sweep_axis: str = "relay_position"
    sweep_values: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    n_blocks: int = 5000
    master_seed: int = 0
    shadowing_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if self.n_blocks < 1:
            raise ValueError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if not 0 <= self.master_seed <= U64:
            raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if not self.sweep_values:
            raise ValueError("sweep_values must not be empty")
        for v in self.sweep_values:
            scenario_for_point(self, v)

    def point_scenario(self, sweep_index: int) -> Scenario:
        return scenario_for_point(self, self.sweep_values[sweep_index])


def pj_dbm_from_ratio(ratio: float, ptx_dbm: float) -> float:
    if ratio < 0:
        raise ValueError(f"pj_ratio must be >= 0, got {ratio}")
    if ratio == 0:
        return -math.inf
    return ptx_dbm + 10.0 * math.log10(ratio)


def cp_len_from_ratio(ratio: float, n_fft: int) -> int:
    cp = Fraction(ratio).limit_denominator(1 << 20) * n_fft
    if ratio <= 0 or cp.denominator != 1 or cp > n_fft:
        raise ValueError(f"cp_ratio={ratio} does not give an integral CP length for n_fft={n_fft}")
    return int(cp)


def scenario_for_point(config: ExperimentConfig, value: float) -> Scenario:
    """Apply one sweep value to the base scenario."""
    base = config.scenario
    if config.sweep_axis == "relay_position":
        if not 0 < value < 1:
            raise ValueError(f"relay position fraction must be in (0, 1), got {value}")
        return base.with_(d_sr_m=value * base.d_sd_m)
    if config.sweep_axis == "pj_ratio":
        return base.with_(pj_dbm=pj_dbm_from_ratio(value, base.p1_dbm))
    cp = cp_len_from_ratio(value, base.n_fft)
    return base.with_(cp_len=cp, cir_len=cp)


def derive_trial_seed(master_seed: int, sweep_index: int, trial_index: int, arm: str) -> int:
    """64-bit seed from a keyed hash of the indices and an arm tag."""
    msg = struct.pack("<QQQ", master_seed & U64, sweep_index & U64, trial_index & U64) + arm.encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8, person=b"cpjam-trial").digest(), "little")


class TrialRngs(NamedTuple):
    data: np.random.Generator
    channel: np.random.Generator
    noise: np.random.Generator
    jam: np.random.Generator


def trial_rngs(master_seed: int, sweep_index: int, trial_index: int, arm: str) -> TrialRngs:
    """Data, channel and noise streams are shared by both arms; only the
    jamming stream is keyed on ``arm``."""

    def gen(tag):
        return np.random.Generator(np.random.PCG64(derive_trial_seed(master_seed, sweep_index, trial_index, tag)))

    return TrialRngs(gen("data"), gen("channel"), gen("noise"), gen(arm))


def _run_arm(config: ExperimentConfig, scenario: Scenario, sweep_index: int, trial_index: int, arm: str):
    rngs = trial_rngs(config.master_seed, sweep_index, trial_index, arm)
    bits = rngs.data.integers(0, 2, 2 * scenario.n_fft, dtype=np.uint8)
    channels = draw_trial_channels(scenario, rngs.channel, shadowing=config.shadowing_enabled)
    return simulate_block(bits, scenario, channels, rngs.noise, rngs.jam)


def run_trial(config: ExperimentConfig, sweep_index: int, trial_index: int) -> tuple[TrialObservation, TrialObservation]:
    """Returns the (jam-on, jam-off) observations of one paired trial."""
    scenario = config.point_scenario(sweep_index)
    on = _run_arm(config, scenario, sweep_index, trial_index, "jam_on")
    off = _run_arm(config, scenario.with_(jam_enabled=False), sweep_index, trial_index, "jam_off")
    return on, off


def _errors(a, b) -> int:
    return int(np.count_nonzero(a != b))


# Extra column after the four observers: MRC errors of the jam-off arm, kept
# to check that cancellation leaves the destination untouched.
COUNT_COLUMNS = tuple(o.value for o in OBSERVERS) + ("dest_mrc_jam_off",)


def trial_error_counts(on: TrialObservation, off: TrialObservation) -> np.ndarray:
    """Counts in ``COUNT_COLUMNS`` order. Destination observers use the jam-on arm."""
    return np.array(
        [
            _errors(off.bits_tx, off.bits_relay_hat),
            _errors(on.bits_tx, on.bits_relay_hat),
            _errors(on.bits_tx, on.bits_dest_p1_hat),
            _errors(on.bits_tx, on.bits_dest_mrc_hat),
            _errors(off.bits_tx, off.bits_dest_mrc_hat),
        ],
        dtype=np.int64,
    )


def _count_range(args) -> np.ndarray:
    config, sweep_index, start, stop = args
    total = np.zeros(len(COUNT_COLUMNS), dtype=np.int64)
    for t in range(start, stop):
        total += trial_error_counts(*run_trial(config, sweep_index, t))
    return total


def _chunks(n: int, size: int):
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def sweep_error_counts(config: ExperimentConfig, workers: int = 1, chunk_size: int = 250) -> np.ndarray:
    """Integer error counts, shape (sweep points, ``COUNT_COLUMNS``)."""
    # ExperimentConfig validates every point at construction, so no trial
    # runs against an invalid scenario.
    jobs = [
        (config, i, lo, hi)
        for i in range(len(config.sweep_values))
        for lo, hi in _chunks(config.n_blocks, chunk_size)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_range, jobs))
    else:
        parts = [_count_range(j) for j in jobs]

    per_point = np.zeros((len(config.sweep_values), len(COUNT_COLUMNS)), dtype=np.int64)
    for (_, i, _, _), counts in zip(jobs, parts):
        per_point[i] += counts
    return per_point


def records_from_counts(config: ExperimentConfig, per_point: np.ndarray) -> list[BerRecord]:
    bits_total = config.n_blocks * 2 * config.scenario.n_fft
    return [
        BerRecord(value, obs.value, int(per_point[i, k]), bits_total)
        for i, value in enumerate(config.sweep_values)
        for k, obs in enumerate(OBSERVERS)
    ]


def run_sweep(config: ExperimentConfig, workers: int = 1, chunk_size: int = 250) -> list[BerRecord]:
    """Aggregate ``n_blocks`` paired trials per sweep point into four records each."""
    return records_from_counts(config, sweep_error_counts(config, workers, chunk_size))


def wilson_ci(errors: int, total: int, z: float = 1.96) -> tuple[float, float]:
    if total < 1:
        raise ValueError("total must be >= 1")
    if not 0 <= errors <= total:
        raise ValueError(f"errors={errors} outside [0, {total}]")
    p = errors / total
    denom = 1.0 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == total else min(1.0, centre + half)
    return lo, hi


def records_by_observer(records: Sequence[BerRecord]) -> dict[str, list[BerRecord]]:
    out: dict[str, list[BerRecord]] = {o.value: [] for o in OBSERVERS}
    for r in records:
        out[r.observer].append(r)
    for v in out.values():
        v.sort(key=lambda r: r.sweep_point)
    return out


def flat_link_ber(
    snr_db: float,
    n_blocks: int,
    n_fft: int = 256,
    rayleigh: bool = False,
    seed: int = 0,
    batch: int = 4096,
) -> tuple[int, int]:
    """Single-link CP-OFDM/QPSK bit errors over a flat channel.

    ``snr_db`` is the per-subcarrier symbol SNR (Es/N0). With ``rayleigh``
    every block sees its own CN(0, 1) single-tap gain; otherwise the channel
    is a unit tap. Returns (bit_errors, bits_total).
    """
    rng = np.random.default_rng(seed)
    params = dsp.OfdmParams(n_fft, 0)
    n0 = 10.0 ** (-snr_db / 10.0)
    errors = 0
    done = 0
    while done < n_blocks:
        b = min(batch, n_blocks - done)
        bits = rng.integers(0, 2, (b, 2 * n_fft), dtype=np.uint8)
        tx = dsp.ofdm_modulate(dsp.qpsk_modulate(bits), params)
        if rayleigh:
            h = (rng.standard_normal((b, 1)) + 1j * rng.standard_normal((b, 1))) / math.sqrt(2.0)
        else:
            h = np.ones((b, 1), dtype=np.complex128)
        rx = awgn(h * tx, n0, rng)
        est = dsp.ofdm_demodulate(rx, params) / h
        errors += int(np.count_nonzero(dsp.qpsk_demodulate(est) != bits))
        done += b
    return errors, n_blocks * 2 * n_fft


def calibrate_sample_rate(
    config: ExperimentConfig,
    target: tuple[float, float] = (0.013, 0.027),
    aim: float = 0.019,
    candidates: Sequence[float] = tuple(3.84e6 * 2 ** (k / 4) for k in range(-4, 17)),
    pilot_blocks: int = 1000,
) -> float:
    """Pick the sample rate whose relay_jam BER lands nearest ``aim``.

    ``config`` must describe a single sweep point; a short pilot run is made
    for each candidate rate and the closest one inside ``target`` wins.
    """
    if len(config.sweep_values) != 1:
        raise ValueError("calibration needs a single-point config")
    best = None
    for fs in candidates:
        pilot = ExperimentConfig(
            scenario=config.scenario.with_(sample_rate_hz=fs),
            sweep_axis=config.sweep_axis,
            sweep_values=config.sweep_values,
            n_blocks=pilot_blocks,
            master_seed=config.master_seed ^ 0x5EED,
            shadowing_enabled=config.shadowing_enabled,
        )
        rec = next(r for r in run_sweep(pilot) if r.observer == Observer.RELAY_JAM)
        if target[0] <= rec.ber <= target[1]:
            score = abs(rec.ber - aim)
            if best is None or score < best[0]:
                best = (score, fs)
    if best is None:
        raise RuntimeError(f"no candidate sample rate puts relay_jam BER in {target}")
    return best[1]
