"""Scenario file parser: sectioned ``key = value`` text into a plain scenario dict."""

from __future__ import annotations

import copy
import os
import re
from pathlib import Path
from typing import Any, Callable

from smoothcfie import SmoothCfieError

THREADS_ENV = "SMOOTHCFIE_THREADS"


class ConfigError(SmoothCfieError):
    """Raised when a scenario file cannot be read or parsed."""


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {value!r}")


def _parse_pair(value: str) -> list[float]:
    parts = value.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"expected two numbers 'x y', got {value!r}")
    return [float(parts[0]), float(parts[1])]


def _parse_pairs(value: str) -> list[list[float]]:
    return [_parse_pair(chunk) for chunk in value.split(";") if chunk.strip()]


# Keys accepted in each section with their converters.
_SECTION_KEYS: dict[str, dict[str, Callable[[str], Any]]] = {
    "problem": {
        "name": str,
        "bc": str.lower,
        "formulation": str.lower,
        "k": float,
        "eta": float,
        "incident": str.lower,
        "angle": float,
        "sources": _parse_pairs,
        "source_sign": float,
        "separation": float,
    },
    "discretization": {
        "method": str.upper,
        "n": int,
        "mesh_p": int,
        "gmres_tol": float,
        "max_iter": int,
        "n_dirs": int,
        "reference_multiplier": int,
        "reference_method": str.upper,
    },
    "obstacle": {
        "shape": str.lower,
        "offset": _parse_pair,
        "mirror": _parse_bool,
        "radius": float,
        "a": float,
        "b": float,
    },
    "output": {
        "dir": str,
        "prefix": str,
    },
}

_SHAPE_PARAMS = ("radius", "a", "b")
_SECTION_RE = re.compile(r"^\[\s*([a-z_]+)(?:\.(\d+))?\s*\]$")


def parse_scenario_text(raw: str) -> dict:
    """Parse scenario text into a dict shaped like ``scenario.v1.json``.

    Expected format, one directive per line; blank lines and lines starting
    with ``#`` are ignored::

        [problem]
        bc = dirichlet
        k = 4
        [discretization]
        method = MK
        n = 120
        [obstacle.1]
        shape = kite

    Raises ConfigError with the offending line number on any parse problem.
    """
    sections: dict[str, dict[str, Any]] = {}
    obstacles: dict[int, dict[str, Any]] = {}
    current: dict[str, Any] | None = None
    current_kind = ""

    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue

        header = _SECTION_RE.match(stripped)
        if header:
            kind, index = header.group(1), header.group(2)
            if kind not in _SECTION_KEYS:
                raise ConfigError(f"Line {lineno}: unknown section [{kind}]")
            if (kind == "obstacle") != (index is not None):
                raise ConfigError(
                    f"Line {lineno}: obstacle sections are written [obstacle.N]; other sections take no index"
                )
            if kind == "obstacle":
                number = int(index)
                if number in obstacles:
                    raise ConfigError(f"Line {lineno}: duplicate section [obstacle.{number}]")
                current = obstacles[number] = {}
            else:
                if kind in sections:
                    raise ConfigError(f"Line {lineno}: duplicate section [{kind}]")
                current = sections[kind] = {}
            current_kind = kind
            continue

        if current is None:
            raise ConfigError(f"Line {lineno}: directive outside of any section: {stripped!r}")
        if "=" not in stripped:
            raise ConfigError(f"Line {lineno}: expected 'key = value', got: {stripped!r}")

        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        converters = _SECTION_KEYS[current_kind]
        if key not in converters:
            raise ConfigError(f"Line {lineno}: unknown key {key!r} in [{current_kind}]")
        if key in current:
            raise ConfigError(f"Line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"Line {lineno}: key {key!r} must not be empty")
        try:
            current[key] = converters[key](value)
        except ValueError as exc:
            raise ConfigError(f"Line {lineno}: bad value for {key!r}: {exc}") from None

    data: dict[str, Any] = {
        "problem": sections.get("problem", {}),
        "discretization": sections.get("discretization", {}),
        "output": sections.get("output", {}),
        "obstacles": [],
    }
    for number in sorted(obstacles):
        entry = obstacles[number]
        obstacle: dict[str, Any] = {"shape": entry.get("shape", "")}
        obstacle["params"] = {p: entry[p] for p in _SHAPE_PARAMS if p in entry}
        obstacle["offset"] = entry.get("offset", [0.0, 0.0])
        obstacle["mirror"] = entry.get("mirror", False)
        data["obstacles"].append(obstacle)
    return data


def parse_scenario_file(path: str | Path) -> dict:
    """Read and parse a scenario file."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read scenario file: {exc}") from exc
    data = parse_scenario_text(raw)
    data["problem"].setdefault("name", Path(path).stem)
    return data


# Command-line override name -> (section, key)
OVERRIDE_KEYS = {
    "n": ("discretization", "n"),
    "method": ("discretization", "method"),
    "mesh_p": ("discretization", "mesh_p"),
    "gmres_tol": ("discretization", "gmres_tol"),
    "k": ("problem", "k"),
    "eta": ("problem", "eta"),
    "bc": ("problem", "bc"),
    "formulation": ("problem", "formulation"),
    "out_dir": ("output", "dir"),
}


def apply_overrides(data: dict, overrides: dict[str, Any]) -> dict:
    """Return a copy of *data* with the non-None *overrides* written into their sections."""
    merged = copy.deepcopy(data)
    for name, value in overrides.items():
        if value is None:
            continue
        try:
            section, key = OVERRIDE_KEYS[name]
        except KeyError:
            raise ConfigError(f"unknown override {name!r}") from None
        merged.setdefault(section, {})[key] = value
    return merged


def thread_count() -> int:
    """Worker threads for assembly and grid evaluation, from SMOOTHCFIE_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value
