"""Scenario grids from TOML files.

A config has an optional ``[run]`` table of defaults and one or more
``[[scenario]]`` tables::

    [run]
    seed = 2024
    n = 2000
    replicates = 500
    B = 250

    [[scenario]]
    dgp = "gaussian"
    cells = ["right both", "both wrong"]     # default: all four
    inference = ["bootstrap", "influence"]

Every ``[run]`` key may be overridden per scenario. ``n`` may be a list, in
which case the scenario is expanded over the sample sizes. Unknown keys are
rejected with :class:`ConfigError` naming the key.
"""
from __future__ import annotations

from dataclasses import replace
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .simlab import CELLS, grid

RUN_KEYS = {
    "seed": int, "n": (int, list), "replicates": int, "B": int, "if_mode": str,
    "aipw_mode": str, "quadratic": str, "truth_reps": int,
    "estimators": list, "inference": list,
}
SCENARIO_KEYS = dict(RUN_KEYS, dgp=str, family=str, link=str, cells=list,
                     coefficients=list, label=str)
_TOP_KEYS = {"run", "scenario"}


def _check(table, allowed, where):
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}; allowed: {sorted(allowed)}")
        kind = allowed[key]
        if not isinstance(value, kind) or isinstance(value, bool):
            raise ConfigError(f"key {key!r} in {where} has the wrong type ({type(value).__name__})")


def parse_config(data: dict):
    """Turn a parsed TOML mapping into a list of :class:`ScenarioSpec`."""
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown top-level key {key!r}; allowed: {sorted(_TOP_KEYS)}")
    run = dict(data.get("run", {}))
    _check(run, RUN_KEYS, "[run]")
    scenarios = data.get("scenario", [])
    if not isinstance(scenarios, list) or not scenarios:
        raise ConfigError("config needs at least one [[scenario]] table")
    specs = []
    for i, sc in enumerate(scenarios):
        where = f"scenario #{i + 1}"
        _check(sc, SCENARIO_KEYS, where)
        if "dgp" not in sc:
            raise ConfigError(f"key 'dgp' missing in {where}")
        merged = dict(run)
        merged.update(sc)
        cells = merged.pop("cells", None)
        if cells is not None:
            for c in cells:
                if c not in CELLS:
                    raise ConfigError(f"unknown cell {c!r} in {where}; choose from {list(CELLS)}")
        ns = merged.pop("n", 2000)
        ns = ns if isinstance(ns, list) else [ns]
        if "coefficients" in merged:
            merged["coefficients"] = tuple(merged["coefficients"])
        for key in ("estimators", "inference"):
            if key in merged:
                merged[key] = tuple(merged[key])
        dgp = merged.pop("dgp")
        label = merged.pop("label", None)
        for n in ns:
            try:
                cell_specs = grid(dgp, cells, n=int(n), **merged)
            except TypeError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            if label is not None:
                cell_specs = [replace(s, label=label) for s in cell_specs]
            specs.extend(cell_specs)
    return specs


def load_config(path):
    """Read a TOML scenario file into a list of :class:`ScenarioSpec`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return parse_config(data)


def bundled_configs():
    """Names of the scenario configs shipped with the package."""
    root = resources.files("drglm") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".toml"))


def bundled_config_path(name):
    if not name.endswith(".toml"):
        name += ".toml"
    path = resources.files("drglm") / "configs" / name
    if not path.is_file():
        raise ConfigError(f"no bundled config {name!r}; available: {bundled_configs()}")
    return Path(str(path))
