"""TOML configuration with unit-suffixed keys.

The packaged ``data/default.toml`` supplies every key; a user file only needs
the keys it changes.
"""

from __future__ import annotations

import copy
import math
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .analytics import beta3_from_slope
from .core import SPEED_OF_LIGHT, FiberParams, db_per_km_to_per_m
from .detection import DetectorParams
from .errors import ConfigurationError
from .harness import ExperimentConfig, LockSettings, PsaState, SweepAxis, SweepSpec
from .modulation import LinkInputPlan, ModulatorDrive, ModulatorKind
from .propagation import StepConfig

SECTIONS = ("grid", "fiber", "pump", "signal", "modulator", "detector", "sweep")


def default_config_text() -> str:
    return resources.files("psalink").joinpath("data/default.toml").read_text()


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if isinstance(value, dict):
            if key not in out or not isinstance(out[key], dict):
                if path == "":
                    raise ConfigurationError(f"unknown config section [{key}]; expected one of {SECTIONS}")
                out[key] = {}
            out[key] = _merge(out[key], value, where)
        else:
            out[key] = value
    return out


_OPTIONAL_KEYS = {
    "fiber": {"delta_beta_per_m", "beta2_s2_per_m"},
    "modulator": {"bias_phase_rad"},
    "detector": {"band_lo_hz", "band_hi_hz"},
    "sweep": {"fixed_theta_rad", "values"},
}


def _check_keys(raw: dict, defaults: dict) -> None:
    for section, body in raw.items():
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown config section [{section}]; expected one of {SECTIONS}")
        known = set(defaults.get(section, {})) | _OPTIONAL_KEYS.get(section, set())
        for key in body:
            if key not in known:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]")


def load_raw(path: str | Path | None = None) -> dict:
    """Defaults merged with the user file (if any)."""
    defaults = tomllib.loads(default_config_text())
    if path is None:
        return defaults
    try:
        with open(path, "rb") as fh:
            user = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML in {path}: {exc}") from exc
    _check_keys(user, defaults)
    return _merge(defaults, user)


def _num(section: dict, key: str, name: str) -> float:
    try:
        v = section[key]
    except KeyError as exc:
        raise ConfigurationError(f"missing key {key!r} in [{name}]") from exc
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"[{name}] {key} must be a number, got {v!r}")
    return float(v)


def _freq(section: dict, key: str, name: str):
    v = section.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigurationError(f"[{name}] {key} must be a frequency in Hz, got {v!r}")
    return v


def fiber_from_raw(f: dict) -> FiberParams:
    length = _num(f, "length_m", "fiber")
    zdw = _num(f, "zdw_nm", "fiber") * 1e-9
    lam_p = _num(f, "pump_wavelength_nm", "fiber") * 1e-9
    # 1 ps/(nm^2 km) = 1e3 s/m^3
    slope = _num(f, "dispersion_slope_ps_per_nm2_km", "fiber") * 1e3
    beta3 = beta3_from_slope(slope, zdw)
    return FiberParams(
        length=length,
        gamma=_num(f, "gamma_per_w_km", "fiber") / 1000.0,
        alpha=db_per_km_to_per_m(_num(f, "alpha_db_per_km", "fiber")),
        beta2=_beta2(f, lam_p, zdw, slope),
        beta3=beta3,
        beta4=_num(f, "beta4_s4_per_m", "fiber"),
        zdw=zdw,
        dispersion_slope=slope,
    )


def _beta2(f: dict, lam_p: float, zdw: float, slope: float) -> float:
    if "beta2_s2_per_m" in f:
        return _num(f, "beta2_s2_per_m", "fiber")
    # D = S (lambda - lambda_0), beta2 = -lambda^2 D / (2 pi c)
    d = slope * (lam_p - zdw)
    return -(lam_p**2) * d / (2.0 * math.pi * SPEED_OF_LIGHT)


def build_config(raw: dict, name: str = "run") -> ExperimentConfig:
    g, f, p, s, m, d, sw = (raw.get(k, {}) for k in SECTIONS)

    drive = ModulatorDrive(
        v_pi=_num(m, "v_pi_v", "modulator"),
        v_dc=_num(m, "v_dc_v", "modulator"),
        rf_power_dbm=_num(m, "rf_power_dbm", "modulator"),
        tone1_hz=_freq(m, "tone1_hz", "modulator"),
        tone2_hz=_freq(m, "tone2_hz", "modulator"),
        tone1_phase=_num(m, "tone1_phase_rad", "modulator"),
        tone2_phase=_num(m, "tone2_phase_rad", "modulator"),
        bias_phase=_num(m, "bias_phase_rad", "modulator") if "bias_phase_rad" in m else None,
        rf_load=_num(m, "rf_load_ohm", "modulator"),
    )
    try:
        kind = ModulatorKind(m.get("kind", "standard_mzm"))
    except ValueError as exc:
        raise ConfigurationError(f"[modulator] kind={m.get('kind')!r} is not one of {[k.value for k in ModulatorKind]}") from exc
    plan = LinkInputPlan(
        pump_power_dbm=_num(p, "power_dbm", "pump"),
        combined_signal_idler_power_dbm=_num(s, "combined_power_dbm", "signal"),
        signal_offset_hz=_freq(s, "offset_hz", "signal"),
        modulator=drive,
        modulator_kind=kind,
    )

    fiber = fiber_from_raw(f)
    if "delta_beta_per_m" in f:
        # effective mismatch carried entirely by beta2 at the signal offset
        omega = 2.0 * math.pi * float(plan.signal_offset_hz)
        fiber = fiber.with_(beta2=_num(f, "delta_beta_per_m", "fiber") / omega**2, beta4=0.0)

    band = None
    if "band_lo_hz" in d or "band_hi_hz" in d:
        if not ("band_lo_hz" in d and "band_hi_hz" in d):
            raise ConfigurationError("[detector] needs both band_lo_hz and band_hi_hz")
        band = (_freq(d, "band_lo_hz", "detector"), _freq(d, "band_hi_hz", "detector"))
    detector = DetectorParams(
        sensitivity=_num(d, "sensitivity_a_per_w", "detector"),
        rf_load=_num(d, "rf_load_ohm", "detector"),
        post_fiber_loss_db=_num(d, "post_fiber_loss_db", "detector"),
        band_hz=band,
    )

    try:
        axis = SweepAxis(sw.get("axis", "input_rf_power"))
        state = PsaState(sw.get("psa_state", "both"))
    except ValueError as exc:
        raise ConfigurationError(f"[sweep] {exc}") from exc
    if "values" in sw:
        sweep = SweepSpec(axis, tuple(float(v) for v in sw["values"]), state)
    else:
        sweep = SweepSpec.from_range(axis, _num(sw, "start", "sweep"), _num(sw, "stop", "sweep"),
                                     _num(sw, "step", "sweep"), state)
    steps = StepConfig(
        n_steps=int(_num(sw, "initial_z_steps", "sweep")),
        convergence_db=_num(sw, "converge_db", "sweep"),
        max_steps=int(_num(sw, "max_z_steps", "sweep")),
    )
    lock = LockSettings(
        relock=bool(sw.get("relock_per_point", True)),
        theta=_num(sw, "fixed_theta_rad", "sweep") if "fixed_theta_rad" in sw else None,
    )
    return ExperimentConfig(
        plan=plan,
        fiber=fiber,
        detector=detector,
        steps=steps,
        sweep=sweep,
        lock=lock,
        auto_steps=bool(sw.get("auto_converge", True)),
        n_samples=int(_num(g, "n_samples", "grid")) if "n_samples" in g else None,
        name=name,
    )


def load_config(path: str | Path | None = None, name: str = "run") -> ExperimentConfig:
    return build_config(load_raw(path), name)
