"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Every key not given takes its
default; the defaults reproduce the urban-macro parameter set the presets
are built around (2 GHz, 4 dB shadowing, 23 dBm, -174 dBm/Hz, 1 km, 32-tap
CIR, 256-point FFT, QPSK, 5000 blocks). ``sample_rate_hz`` defaults to
3.84 MHz (256 subcarriers at 15 kHz spacing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from .montecarlo import SWEEP_AXES, ExperimentConfig, U64, pj_dbm_from_ratio
from .protocol import Scenario

DEFAULT_POSITIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str, line: int | None = None):
        self.key = key
        self.line = line
        where = f"line {line}: " if line is not None else ""
        what = f"key '{key}': " if key else ""
        super().__init__(f"{where}{what}{message}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    return int(text.strip(), 0)


def _optional_int(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else _int(t)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _pow2(v):
    return v > 0 and v & (v - 1) == 0


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    rule: str = ""


KEYS: dict[str, _Key] = {
    "fc_ghz": _Key(float, 2.0, lambda v: v > 0, "must be > 0"),
    "shadow_sigma_db": _Key(float, 4.0, lambda v: v >= 0, "must be >= 0"),
    "ptx_dbm": _Key(float, 23.0, math.isfinite, "must be finite"),
    "pj_ratio": _Key(float, 1.0, lambda v: v >= 0 and math.isfinite(v), "must be >= 0"),
    "n0_dbm_per_hz": _Key(float, -174.0, math.isfinite, "must be finite"),
    "d_sd_m": _Key(float, 1000.0, lambda v: v > 0, "must be > 0"),
    "relay_position": _Key(float, 0.5, lambda v: 0 < v < 1, "must be in (0, 1)"),
    "cir_len": _Key(_int, 32, lambda v: v >= 1, "must be >= 1"),
    "n_fft": _Key(_int, 256, _pow2, "must be a power of two"),
    "cp_len": _Key(_optional_int, None, lambda v: v is None or v >= 0, "must be >= 0"),
    "modulation": _Key(lambda t: t.strip().lower(), "qpsk", lambda v: v == "qpsk", "only 'qpsk' is supported"),
    "decay_span_db": _Key(float, 20.0, lambda v: v >= 0, "must be >= 0"),
    "sample_rate_hz": _Key(float, 3.84e6, lambda v: v > 0, "must be > 0"),
    "n_blocks": _Key(_int, 5000, lambda v: v >= 1, "must be >= 1"),
    "master_seed": _Key(_int, 0, lambda v: 0 <= v <= U64, "must be an unsigned 64-bit integer"),
    "shadowing": _Key(_bool, True),
    "jam_enabled": _Key(_bool, True),
    "noise_enabled": _Key(_bool, True),
    "jam_offset_samples": _Key(_optional_int, None, lambda v: v is None or v >= 0, "must be >= 0"),
    "sweep_axis": _Key(lambda t: t.strip(), "relay_position", lambda v: v in SWEEP_AXES, f"must be one of {SWEEP_AXES}"),
    "sweep_values": _Key(_floats, DEFAULT_POSITIONS, lambda v: len(v) > 0, "must list at least one value"),
}


def defaults() -> dict:
    return {k: spec.default for k, spec in KEYS.items()}


def check_value(key: str, value, line: int | None = None):
    if key not in KEYS:
        raise ConfigError(key, f"unknown key (valid keys: {', '.join(KEYS)})", line)
    spec = KEYS[key]
    if isinstance(value, str):
        try:
            value = spec.parse(value)
        except ValueError as exc:
            raise ConfigError(key, str(exc), line) from None
    if not spec.check(value):
        raise ConfigError(key, f"{value!r} {spec.rule}", line)
    return value


def parse_assignments(text: str) -> tuple[dict, dict]:
    """Explicit ``key = value`` pairs only, with the line each came from."""
    values: dict = {}
    lines: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"expected 'key = value', got {raw.strip()!r}", no)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(None, "missing key before '='", no)
        if key in lines:
            raise ConfigError(key, f"duplicate key (first set on line {lines[key]})", no)
        values[key] = check_value(key, value, no)
        lines[key] = no
    return values, lines


def resolve(*layers: dict, lines: dict | None = None) -> dict:
    """Stack setting layers over the defaults, validate, and materialize
    ``cp_len`` (which otherwise follows ``cir_len``)."""
    settings = defaults()
    for layer in layers:
        settings.update(layer)
    settings = {k: check_value(k, v, (lines or {}).get(k)) for k, v in settings.items()}
    build_config(settings, lines)
    if settings["cp_len"] is None:
        settings["cp_len"] = settings["cir_len"]
    return settings


def parse_settings(text: str) -> dict:
    """Parse config text into a fully-resolved settings dict."""
    values, lines = parse_assignments(text)
    return resolve(values, lines=lines)


def build_config(settings: dict, lines: dict | None = None) -> ExperimentConfig:
    """Turn resolved settings into an ExperimentConfig, naming the culprit key
    when a cross-field constraint fails."""
    lines = lines or {}
    s = {k: check_value(k, v, lines.get(k)) for k, v in {**defaults(), **settings}.items()}
    cp_len = s["cir_len"] if s["cp_len"] is None else s["cp_len"]

    def fail(key, msg):
        raise ConfigError(key, msg, lines.get(key))

    if cp_len > s["n_fft"]:
        fail("cp_len", f"{cp_len} exceeds n_fft={s['n_fft']}")
    if s["cir_len"] > s["n_fft"]:
        fail("cir_len", f"{s['cir_len']} exceeds n_fft={s['n_fft']}")
    if cp_len < s["cir_len"] - 1:
        fail("cp_len", f"{cp_len} is shorter than cir_len - 1 = {s['cir_len'] - 1}")

    scenario = Scenario(
        d_sd_m=s["d_sd_m"],
        d_sr_m=s["relay_position"] * s["d_sd_m"],
        p1_dbm=s["ptx_dbm"],
        p2_dbm=s["ptx_dbm"],
        pj_dbm=pj_dbm_from_ratio(s["pj_ratio"], s["ptx_dbm"]),
        fc_ghz=s["fc_ghz"],
        sample_rate_hz=s["sample_rate_hz"],
        n_fft=s["n_fft"],
        cp_len=cp_len,
        cir_len=s["cir_len"],
        shadow_sigma_db=s["shadow_sigma_db"],
        jam_enabled=s["jam_enabled"],
        jam_offset_override_samples=s["jam_offset_samples"],
        n0_dbm_per_hz=s["n0_dbm_per_hz"],
        decay_span_db=s["decay_span_db"],
        noise_enabled=s["noise_enabled"],
    )
    try:
        return ExperimentConfig(
            scenario=scenario,
            sweep_axis=s["sweep_axis"],
            sweep_values=s["sweep_values"],
            n_blocks=s["n_blocks"],
            master_seed=s["master_seed"],
            shadowing_enabled=s["shadowing"],
        )
    except ValueError as exc:
        raise ConfigError("sweep_values", str(exc), lines.get("sweep_values")) from None


def parse_config(text: str) -> ExperimentConfig:
    return build_config(parse_settings(text))


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_settings(settings: dict) -> str:
    return "".join(f"{k} = {format_value(settings[k])}\n" for k in KEYS)
