"""Shared pytest fixtures for smoothcfie tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from smoothcfie.geometry import ParametricCurve

EXAMPLES = Path(__file__).resolve().parent / "examples"


@pytest.fixture()
def kite() -> ParametricCurve:
    return ParametricCurve("kite")


@pytest.fixture()
def unit_circle() -> ParametricCurve:
    return ParametricCurve("circle", {"radius": 1.0})


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture()
def circle_scenario_text() -> str:
    """Point source at the origin inside the unit circle; the scattered field is known exactly."""
    return (
        "[problem]\n"
        "name = circle\n"
        "bc = dirichlet\n"
        "k = 2\n"
        "incident = point_source\n"
        "sources = 0 0\n"
        "[discretization]\n"
        "method = MK\n"
        "n = 24\n"
        "n_dirs = 36\n"
        "[obstacle.1]\n"
        "shape = circle\n"
        "radius = 1\n"
    )


@pytest.fixture()
def scenario_file(tmp_path: Path):
    """Factory fixture: write scenario text to a uniquely-named file, return the Path.

    An ``[output]`` section pointing into ``tmp_path`` is appended unless the
    text already has one.
    """
    counter = {"n": 0}

    def _make(text: str) -> Path:
        counter["n"] += 1
        p = tmp_path / f"scenario_{counter['n']}.cfg"
        if "[output]" not in text:
            out_dir = tmp_path / f"out_{counter['n']}"
            text = text + f"[output]\ndir = {out_dir}\n"
        p.write_text(text, encoding="utf-8")
        return p

    return _make
