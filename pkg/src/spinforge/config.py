"""Experiment configuration: schema-validated JSON/TOML with explicit units.

Every physical quantity carries its unit in the key name (``a_perp_khz``,
``t1_op_us``...), so configuration files are self-documenting and the
angular/ordinary frequency conversion happens in exactly one place.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import environment as env
from . import hyperfine as hf

try:  # Python >= 3.11
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - fallback for 3.10
    import tomli as _toml

__all__ = ["ConfigError", "ExperimentConfig", "default_config_dict"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def default_config_dict() -> dict:
    return {
        "hyperfine": {
            "a_par_khz": 19.4,
            "a_perp_khz": 50.5,
            "omega_l_khz": 567.4,
        },
        "electron": {
            "t2_dd_us": 16.1,
            "pi_pulse_ns": 31.0,
        },
        "ensemble": {
            "couplings_khz": [2.25, 7.18],
        },
        "dark_spins": {
            "a1_khz": 2.25,
            "a2_khz": 7.18,
            "t1_dark_1_min": 5.12,
            "t1_dark_2_min": 1.5,
        },
        "optics": {
            "t1_op_us": 60.0,
            "t_window_us": 120.0,
            "p_flip": 0.002,
            "n_readout_pulses": 450,
            "n_init_pulses": 40,
            "excited_a_par_khz": None,
            "excited_a_perp_khz": None,
        },
        "seed": 0,
    }


_SCHEMA = {
    "hyperfine": {"a_par_khz": float, "a_perp_khz": float,
                  "omega_l_khz": float},
    "electron": {"t2_dd_us": float, "pi_pulse_ns": float},
    "ensemble": {"couplings_khz": list},
    "dark_spins": {"a1_khz": float, "a2_khz": float, "t1_dark_1_min": float,
                   "t1_dark_2_min": float},
    "optics": {"t1_op_us": float, "t_window_us": float, "p_flip": float,
               "n_readout_pulses": int, "n_init_pulses": int,
               "excited_a_par_khz": (float, type(None)),
               "excited_a_perp_khz": (float, type(None))},
    "seed": int,
}


def _check(section: str, key: str, value, expected) -> None:
    path = f"{section}.{key}" if key else section
    if expected is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(path, "expected a number")
    elif expected is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(path, "expected an integer")
    elif expected is list:
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) for v in value):
            raise ConfigError(path, "expected a list of numbers")
    elif isinstance(expected, tuple):
        if not (value is None or isinstance(value, (int, float))):
            raise ConfigError(path, "expected a number or null")


def _validate(data: dict) -> dict:
    merged = default_config_dict()
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        if section == "seed":
            _check("seed", "", content, int)
            merged["seed"] = content
            continue
        if not isinstance(content, dict):
            raise ConfigError(section, "expected a table/object")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            _check(section, key, value, _SCHEMA[section][key])
            merged[section][key] = value
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(default_factory=default_config_dict)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            try:
                data = _toml.loads(text.decode())
            except _toml.TOMLDecodeError as exc:
                raise ConfigError("<file>", f"TOML parse error: {exc}")
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError("<file>", f"JSON parse error: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("<file>", "top level must be a table/object")
        return cls(_validate(data))

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls(default_config_dict())

    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def hyperfine_params(self) -> hf.HyperfineParams:
        h = self.raw["hyperfine"]
        return hf.HyperfineParams.from_khz(h["a_par_khz"], h["a_perp_khz"],
                                           h["omega_l_khz"])

    def electron_t2(self) -> float:
        return self.raw["electron"]["t2_dd_us"] * 1e-6

    def ensemble(self) -> ch.LarmorEnsemble:
        c = self.raw["ensemble"]["couplings_khz"]
        if len(c) != 2:
            raise ConfigError("ensemble.couplings_khz",
                              "expected exactly two couplings")
        khz = 2 * np.pi * 1e3
        return ch.LarmorEnsemble.from_couplings(c[0] * khz, c[1] * khz)

    def dark_spin_model(self) -> env.DarkSpinModel:
        d = self.raw["dark_spins"]
        return env.DarkSpinModel.from_khz(
            d["a1_khz"], d["a2_khz"],
            d["t1_dark_1_min"] * 60.0, d["t1_dark_2_min"] * 60.0)

    def optical_params(self) -> ch.OpticalParams:
        o = self.raw["optics"]
        ground = self.hyperfine_params()
        if o["excited_a_par_khz"] is None or o["excited_a_perp_khz"] is None:
            base = ch.default_optical_params(ground)
            excited = base.excited
        else:
            excited = hf.HyperfineParams.from_khz(
                o["excited_a_par_khz"], o["excited_a_perp_khz"],
                ground.omega_l / (2 * np.pi * 1e3))
        return ch.OpticalParams(
            ground=ground, excited=excited,
            t1_op=o["t1_op_us"] * 1e-6, t_window=o["t_window_us"] * 1e-6,
            p_flip=o["p_flip"], n_readout_pulses=o["n_readout_pulses"],
            n_init_pulses=o["n_init_pulses"])
