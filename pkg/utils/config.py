# utils/config.py
"""Run configuration: JSON presets, --set overrides and environment variables."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from utils.errors import ConfigError

PROJECT_ROOT = Path(__file__).resolve().parent.parent
PRESET_DIR = PROJECT_ROOT / "data" / "presets"
DEFAULT_OUTPUT_DIR = os.path.join("data", "runs")

# section -> fields, the layout of the preset files
SECTIONS: Dict[str, Tuple[str, ...]] = {
    "mesh": ("nx", "ny"),
    "time": ("tau",),
    "frequency": ("omega_max", "n_omega"),
    "training": ("n_train", "sampling", "seed", "eps_x", "eps_f", "eps_interface", "eps_subdomain",
                 "n_s", "n_f", "n_gamma", "n_i"),
    "evaluation": ("m_samples", "eval_seed", "time_levels", "sweep_max", "n_validation"),
}
# not part of the config hash
_RUNTIME_FIELDS = ("output_dir", "workers")


@dataclass
class RunConfig:
    problem: str = "heat"
    nx: int = 50
    ny: int = 50
    tau: float = 5e-4
    omega_max: float = 20.0
    n_omega: int = 20
    n_train: int = 10
    sampling: str = "uniform"
    seed: int = 2024
    eps_x: float = 1e-8
    eps_f: float = 1e-8
    eps_interface: float = 1e-8
    eps_subdomain: float = 1e-8
    n_s: Tuple[int, int] = (4, 4)
    n_f: Tuple[int, int] = (4, 4)
    n_gamma: int = 1
    n_i: Tuple[int, int] = (4, 4)
    m_samples: int = 1000
    eval_seed: int = 7
    time_levels: Tuple[float, ...] = (0.2, 0.8)
    sweep_max: int = 6
    n_validation: int = 100
    output_dir: str = DEFAULT_OUTPUT_DIR
    workers: int = 1

    def __post_init__(self):
        for name in ("n_s", "n_f", "n_i"):
            setattr(self, name, _pair(name, getattr(self, name)))
        self.time_levels = tuple(float(t) for t in self.time_levels)

    # ---- validation ----
    def validate(self) -> "RunConfig":
        errors: List[str] = []
        from utils.problems import PROBLEMS
        if self.problem not in PROBLEMS:
            errors.append(f"unknown problem {self.problem!r}")
        for name in ("nx", "ny", "n_train", "m_samples", "sweep_max", "n_validation", "workers"):
            if int(getattr(self, name)) < 1:
                errors.append(f"{name} must be positive")
        if self.nx < 2 or self.ny < 2:
            errors.append("nx and ny must be >= 2")
        if self.nx % 2:
            errors.append(f"nx must be even (interface at x1=0.5), got {self.nx}")
        if self.n_omega < 2:
            errors.append("n_omega must be >= 2")
        for name in ("tau", "omega_max", "eps_x", "eps_f", "eps_interface", "eps_subdomain"):
            if not float(getattr(self, name)) > 0:
                errors.append(f"{name} must be > 0")
        for name in ("n_s", "n_f", "n_i"):
            if min(getattr(self, name)) < 1:
                errors.append(f"{name} caps must be >= 1")
        if self.n_gamma < 1:
            errors.append("n_gamma must be >= 1")
        if self.sampling != "uniform":
            errors.append(f"unsupported sampling rule {self.sampling!r}")
        if self.problem in PROBLEMS:
            T = PROBLEMS[self.problem]().final_time
            if self.tau > 0:
                steps = round(T / self.tau)
                if steps < 1 or abs(steps * self.tau - T) > 1e-9 * max(T, 1.0):
                    errors.append(f"tau={self.tau} does not divide the final time T={T}")
            if any(not 0.0 <= t <= T for t in self.time_levels):
                errors.append(f"time_levels must lie in [0, {T}]")
        if errors:
            raise ConfigError("; ".join(errors))
        return self

    # ---- (de)serialization ----
    def to_dict(self, runtime: bool = True) -> Dict[str, Any]:
        flat = asdict(self)
        out: Dict[str, Any] = {"problem": flat["problem"]}
        for section, names in SECTIONS.items():
            out[section] = {n: _jsonable(flat[n]) for n in names}
        if runtime:
            out.update({n: flat[n] for n in _RUNTIME_FIELDS})
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        flat: Dict[str, Any] = {}
        for key, value in data.items():
            if key in SECTIONS:
                if not isinstance(value, Mapping):
                    raise ConfigError(f"section {key!r} must be an object")
                for sub, v in value.items():
                    if sub not in SECTIONS[key]:
                        raise ConfigError(f"unknown setting {key}.{sub}")
                    flat[sub] = v
            elif key in known:
                flat[key] = value
            else:
                raise ConfigError(f"unknown setting {key!r}")
        try:
            return cls(**flat)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(runtime=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.output_dir) / f"{self.problem}-{self.config_hash()}"


def _pair(name: str, value) -> Tuple[int, int]:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"{name} needs one value per subdomain, got {value!r}")
        return int(value[0]), int(value[1])
    return int(value), int(value)


def _jsonable(value):
    return list(value) if isinstance(value, tuple) else value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def load_preset(name: str) -> RunConfig:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no preset named {name!r} in {PRESET_DIR}")
    return load_config_file(path)


def load_config_file(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_dict(data)


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """Apply `section.key=value` (or `key=value`) strings; values are parsed as JSON."""
    data = config.to_dict()
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, raw = item.split("=", 1)
        value = _parse_value(raw.strip())
        parts = key.strip().split(".")
        if len(parts) == 2 and parts[0] in SECTIONS:
            if parts[1] not in SECTIONS[parts[0]]:
                raise ConfigError(f"unknown setting {key!r}")
            data[parts[0]][parts[1]] = value
        elif len(parts) == 1:
            section = next((s for s, names in SECTIONS.items() if parts[0] in names), None)
            if section is not None:
                data[section][parts[0]] = value
            elif parts[0] in data:
                data[parts[0]] = value
            else:
                raise ConfigError(f"unknown setting {key!r}")
        else:
            raise ConfigError(f"unknown setting {key!r}")
    return RunConfig.from_dict(data)


def apply_env(config: RunConfig, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    env = os.environ if environ is None else environ
    changes: Dict[str, Any] = {}
    try:
        if env.get("FTDDVS_OUTPUT_DIR"):
            changes["output_dir"] = env["FTDDVS_OUTPUT_DIR"]
        if env.get("FTDDVS_SEED"):
            changes["seed"] = int(env["FTDDVS_SEED"])
        if env.get("FTDDVS_WORKERS"):
            changes["workers"] = int(env["FTDDVS_WORKERS"])
    except ValueError as exc:
        raise ConfigError(f"bad environment setting: {exc}") from exc
    return replace(config, **changes) if changes else config


def resolve_config(preset: Optional[str] = None, config_file: Optional[str] = None,
                   overrides: Iterable[str] = (), environ: Optional[Mapping[str, str]] = None,
                   output_dir: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """preset -> file -> environment -> CLI flags -> --set overrides, then validate."""
    if config_file:
        config = load_config_file(config_file)
    else:
        config = load_preset(preset or "heat")
    config = apply_env(config, environ)
    if output_dir:
        config = replace(config, output_dir=output_dir)
    if seed is not None:
        config = replace(config, seed=int(seed))
    config = apply_overrides(config, overrides)
    return config.validate()
