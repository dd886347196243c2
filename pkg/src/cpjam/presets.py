"""Named experiment presets and their output layout.

``fig2``        relay position 0.1..0.9 at Pj = Ptx, all four observers.
``fig3_power``  the same position sweep for Pj in {0.25, 0.5, 1} x Ptx.
``fig3_cp``     the position sweep for CP ratios {1/16, 1/8, 1/4} at Pj = Ptx,
                with the CIR length tied to the CP length.

Each curve family member goes to its own CSV; a ``manifest.json`` holding
the resolved settings sits next to them.
"""

from __future__ import annotations

from pathlib import Path

from .config import DEFAULT_POSITIONS, ConfigError, build_config, parse_assignments, resolve
from .montecarlo import ExperimentConfig, cp_len_from_ratio, run_sweep
from .output import emit_csv, write_manifest

PJ_RATIOS = (0.25, 0.5, 1.0)
CP_RATIOS = (1 / 16, 1 / 8, 1 / 4)

_POSITION_SWEEP = {"sweep_axis": "relay_position", "sweep_values": DEFAULT_POSITIONS}

PRESET_BASE = {
    "fig2": {"pj_ratio": 1.0},
    "fig3_power": {},
    "fig3_cp": {"pj_ratio": 1.0},
}
PRESETS = tuple(PRESET_BASE)


class PresetError(ValueError):
    pass


def _check_name(name: str) -> None:
    if name not in PRESET_BASE:
        raise PresetError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")


def preset_settings(name: str, config_text: str = "", overrides: dict | None = None) -> dict:
    """Resolved base settings: defaults < preset < config file < overrides."""
    _check_name(name)
    explicit, lines = parse_assignments(config_text)
    return resolve(PRESET_BASE[name], explicit, overrides or {}, lines=lines)


def preset_plan(name: str, settings: dict) -> list[tuple[str, ExperimentConfig]]:
    """(file stem, config) for every curve family member, all validated up front."""
    _check_name(name)
    if name == "fig2":
        variants = [("fig2", {})]
    elif name == "fig3_power":
        variants = [(f"fig3_power_pj{r:g}", {"pj_ratio": r}) for r in PJ_RATIOS]
    else:
        variants = []
        for r in CP_RATIOS:
            try:
                cp = cp_len_from_ratio(r, settings["n_fft"])
            except ValueError as exc:
                raise ConfigError("n_fft", str(exc)) from None
            variants.append((f"fig3_cp_cp{cp}", {"cp_len": cp, "cir_len": cp}))
    return [(stem, build_config({**settings, **_POSITION_SWEEP, **changes})) for stem, changes in variants]


def run_preset(
    name: str,
    overrides: dict | None = None,
    out_dir=".",
    config_text: str = "",
    workers: int = 1,
    timestamp: str | None = None,
) -> list[Path]:
    settings = preset_settings(name, config_text, overrides)
    plan = preset_plan(name, settings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, config in plan:
        paths.append(emit_csv(run_sweep(config, workers=workers), out / f"{stem}.csv"))
    paths.append(write_manifest(out / "manifest.json", name, settings, [p.name for p in paths], timestamp))
    return paths
