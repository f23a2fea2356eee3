"""Run configuration: defaults, flat ``key = value`` files, and CLI overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

SEED_MAX = 2 ** 64 - 1
FORMATS = ("json", "csv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    tol: float = 1e-8
    max_iters: int = 100
    cap: int = 600
    format: str = "json"
    output: str | None = None
    jobs: int = 1
    seeds: int = 50
    trials: int = 200
    expected: str | None = None

    def __post_init__(self):
        if not 0 <= self.seed <= SEED_MAX:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        for name in ("max_iters", "cap", "jobs", "seeds", "trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")

    def merged(self, **overrides) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_json_dict(self) -> dict:
        return asdict(self)


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    t = types[name]
    try:
        if t == "int":
            return int(raw, 0)
        if t == "float":
            return float(raw)
        if raw.lower() in ("", "none", "null"):
            return None
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = _coerce(key.replace("-", "_"), val.strip("\"'"))
    return out


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    values = {}
    if path is not None:
        try:
            values = parse_config_text(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# expected values for the reproduction table

_REQUIRED = {
    "optimum": float, "local_maximum": float, "dsep_rho_bar": float, "dind_rho_bar": list,
    "ef_rho_bar": float, "ef_00": float, "table1_scores": list, "table1_eps2": list,
    "bell_state_dsep": float, "basis_sizes": list, "level2_block": int, "level1_interval": list,
    "eps_grid": list, "experiment_scores": list, "experiment_bounds": list, "tolerances": dict,
}


def load_expected(path: str | Path | None = None) -> dict:
    """Expected values; malformed files raise ``ConfigError``."""
    try:
        if path is None:
            text = resources.files("realqm").joinpath("data/expected.json").read_text()
        else:
            text = Path(path).read_text()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load expected values: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("expected-values file must hold a JSON object")
    for key, typ in _REQUIRED.items():
        if key not in data:
            raise ConfigError(f"expected-values file lacks {key!r}")
        val = data[key]
        ok = isinstance(val, (int, float)) and not isinstance(val, bool) if typ is float else isinstance(val, typ)
        if not ok:
            raise ConfigError(f"expected value {key!r} has the wrong type")
    if len(data["table1_scores"]) != len(data["table1_eps2"]):
        raise ConfigError("table1 scores and eps2 entries differ in length")
    return data
