"""Simulator configuration: YAML file deep-merged over documented defaults.

Every published constant is a named key, so a config file only needs the
values it changes. Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import energy, retention
from .energy import ArrayConstants
from .faults import FaultSpec
from .retention import AnchorPoint, RetentionCurve
from .workload import ModelConfig, RefreshIntervals, Scenario, WorkspaceScope, load_models


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "array": {
        "p_leak_w": energy.EDRAM_LEAK_2MB_W,
        # null: calibrate against calibration.target_gain
        "e_ref_cycle_j": None,
        "capacity_bytes": energy.WORKSPACE_2MB,
    },
    "calibration": {
        "target_gain": energy.HEADLINE_GAIN,
        "kv_ratio": energy.CALIBRATION_KV_RATIO,
    },
    "retention": {
        "anchors": [
            [retention.T_REL_US, retention.BER_AT_T_REL],
            [retention.QO_LIFETIME_US, retention.BER_AT_QO_LIFETIME],
        ],
    },
    "refresh": {
        "t_std_us": energy.T_STD_US,
        "t_rel_us": energy.T_REL_US,
        "kelle_ber": energy.KELLE_BER,
    },
    "workspace": {"qo_tokens": "prefill", "kv_layers": "active"},
    "models": {"default": "qwen3-8b", "extra": {}},
    "scenarios": {
        "summary": {"prefill": 1024, "decode": 64},
        "translation": {"prefill": 512, "decode": 512},
        "storytelling": {"prefill": 128, "decode": 256},
        "lifecycle": {"prefill": 128, "decode": 256},
    },
    "default_scenario": "storytelling",
    # scenarios making up the cross-scenario gain table
    "table_scenarios": ["summary", "translation", "storytelling"],
    "fault": {"rho_kv": 1e-4, "rho_qo": 0.25, "mask": 0x007F},
    "demo": {"tokens": 64, "d_model": 64, "num_heads": 4},
    "sweep": {"kv_ratio": 1.0},
    "seed": 0,
    "out": "results",
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            # free-form tables
            if path in ("scenarios.", "models.extra."):
                out[key] = value
                continue
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            out[key] = _merge(base[key], value, where + ".")
        elif isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = copy.deepcopy(value)
        else:
            out[key] = value
    return out


@dataclass
class SimConfig:
    raw: dict

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "SimConfig":
        data: dict = {}
        if path is not None:
            try:
                data = yaml.safe_load(Path(path).read_text()) or {}
            except (OSError, yaml.YAMLError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config root must be a mapping")
        raw = _merge(DEFAULTS, data)
        raw = _merge(raw, {k: v for k, v in overrides.items() if v is not None})
        cfg = cls(raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.curve()
            self.constants()
            self.intervals()
            self.scope()
            self.fault_spec()
            scenarios = self.scenarios()
            self.models()
            missing = [k for k in self.raw["table_scenarios"] if k not in scenarios]
            if missing:
                raise ConfigError(f"table_scenarios names undefined scenarios: {missing}")
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def hash(self) -> str:
        # output location is not part of the experiment
        params = {k: v for k, v in self.raw.items() if k != "out"}
        blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])

    def anchors(self) -> tuple[AnchorPoint, AnchorPoint]:
        pts = self.raw["retention"]["anchors"]
        if len(pts) != 2:
            raise ConfigError("retention.anchors needs exactly two [t_us, ber] pairs")
        return tuple(AnchorPoint(float(t), float(b)) for t, b in pts)

    def curve(self) -> RetentionCurve:
        return retention.calibrate(self.anchors())

    def refresh_energy(self) -> float:
        e = self.raw["array"]["e_ref_cycle_j"]
        if e is not None:
            return float(e)
        cal, ref = self.raw["calibration"], self.raw["refresh"]
        return energy.calibrate_refresh_energy(
            float(cal["target_gain"]),
            float(self.raw["array"]["p_leak_w"]),
            float(ref["t_std_us"]),
            float(ref["t_rel_us"]),
            float(cal["kv_ratio"]),
        )

    def constants(self) -> ArrayConstants:
        arr = self.raw["array"]
        return ArrayConstants(
            p_leak=float(arr["p_leak_w"]),
            e_ref_cycle=self.refresh_energy(),
            capacity=int(arr["capacity_bytes"]),
        )

    def intervals(self) -> RefreshIntervals:
        ref = self.raw["refresh"]
        t_kelle = self.curve().interval_for_ber(float(ref["kelle_ber"]))
        return RefreshIntervals(float(ref["t_std_us"]), float(ref["t_rel_us"]), t_kelle)

    def scope(self) -> WorkspaceScope:
        return WorkspaceScope(**self.raw["workspace"])

    def fault_spec(self) -> FaultSpec:
        f = self.raw["fault"]
        return FaultSpec(float(f["rho_kv"]), float(f["rho_qo"]), int(f["mask"]), self.seed)

    def models(self) -> dict[str, ModelConfig]:
        models = load_models()
        for key, spec in self.raw["models"]["extra"].items():
            models[key] = ModelConfig(**spec)
        return models

    def scenarios(self) -> dict[str, Scenario]:
        out = {}
        for key, s in self.raw["scenarios"].items():
            out[key] = Scenario(key.capitalize(), int(s["prefill"]), int(s["decode"]))
        return out

    def select_models(self, name: str | None) -> dict[str, ModelConfig]:
        models = self.models()
        name = name or self.raw["models"]["default"]
        if name == "all":
            return models
        if name not in models:
            raise ConfigError(f"unknown model {name!r}; known: {', '.join(sorted(models))}")
        return {name: models[name]}

    def select_scenarios(self, name: str | None) -> dict[str, Scenario]:
        scenarios = self.scenarios()
        name = name or self.raw["default_scenario"]
        if name == "all":
            return {k: scenarios[k] for k in self.raw["table_scenarios"]}
        if name not in scenarios:
            raise ConfigError(f"unknown scenario {name!r}; known: {', '.join(sorted(scenarios))}, all")
        return {name: scenarios[name]}

