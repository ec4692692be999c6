"""Scenario validation: the packaged JSON Schema contract plus semantic rules."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from smoothcfie import SmoothCfieError
from smoothcfie.config import parse_scenario_file
from smoothcfie.geometry import CORNER_SHAPES
from smoothcfie.quadrature import MIN_SPECTRAL_GRADING

_SCENARIO_SCHEMA_PATH = Path(__file__).resolve().parent / "schemas" / "scenario.v1.json"

_KR_STENCIL = {"KR6": 6, "KR10": 10}


class ValidationError(SmoothCfieError):
    """Raised when a scenario violates the contract schema or a semantic rule."""


def _path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def load_schema() -> dict:
    return json.loads(_SCENARIO_SCHEMA_PATH.read_text(encoding="utf-8"))


def validate_scenario_dict(data: dict) -> dict:
    """Validate an in-memory scenario dict against scenario.v1.json and the semantic rules.

    Returns *data* unchanged on success.
    Raises ValidationError naming the offending field on any problem.
    """
    # 1. Schema validation against scenario.v1.json
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"{_path(exc.absolute_path)}: {exc.message}") from exc

    problem = data["problem"]
    disc = data["discretization"]
    obstacles = data["obstacles"]

    # ── Semantic rules (constraints JSON Schema cannot express) ───────────────

    # 2. corner shapes need a graded mesh
    mesh_p = disc.get("mesh_p", 0)
    for i, obstacle in enumerate(obstacles):
        if obstacle["shape"] in CORNER_SHAPES and mesh_p < 2:
            raise ValidationError(
                f"obstacles[{i}].shape: {obstacle['shape']!r} has a corner and needs discretization.mesh_p >= 2"
            )

    # 3. the classic formulations have no trapezoidal-rule variant
    if problem.get("formulation", "smoothed") == "classic" and disc["method"] == "TR":
        raise ValidationError("discretization.method: TR is only available with formulation = smoothed")

    # 4. KR corrections must fit inside the grid
    for key in ("method", "reference_method"):
        stencil = _KR_STENCIL.get(disc.get(key, ""))
        if stencil and disc["n"] <= stencil:
            raise ValidationError(
                f"discretization.n: {disc[key]} needs n > {stencil}, got {disc['n']}"
            )

    # 5. point sources need locations; plane waves take none
    incident = problem.get("incident", "plane_wave")
    if incident == "point_source" and not problem.get("sources"):
        raise ValidationError("problem.sources: point-source incidence needs at least one source")
    if incident == "plane_wave" and problem.get("sources"):
        raise ValidationError("problem.sources: only valid with incident = point_source")

    # 6. the separation gap opens between exactly two obstacles
    if problem.get("separation") is not None and len(obstacles) != 2:
        raise ValidationError(
            f"problem.separation: needs exactly two obstacles, got {len(obstacles)}"
        )

    # 7. shape parameters belong to their shape
    allowed = {"circle": {"radius"}, "ellipse": {"a", "b"}}
    for i, obstacle in enumerate(obstacles):
        extra = set(obstacle["params"]) - allowed.get(obstacle["shape"], set())
        if extra:
            raise ValidationError(
                f"obstacles[{i}].params: {', '.join(sorted(extra))} not valid for shape {obstacle['shape']!r}"
            )

    # 8. spectral rules on a graded mesh need p >= 4
    if 0 < mesh_p < MIN_SPECTRAL_GRADING:
        for key in ("method", "reference_method"):
            method = disc.get(key)
            if method and method != "TR":
                raise ValidationError(
                    f"discretization.mesh_p: {method} on a graded mesh needs mesh_p >= {MIN_SPECTRAL_GRADING}, got {mesh_p}"
                )

    return data


def validate_scenario(path: str | Path) -> dict:
    """Parse a scenario file, then validate it via validate_scenario_dict."""
    return validate_scenario_dict(parse_scenario_file(path))
