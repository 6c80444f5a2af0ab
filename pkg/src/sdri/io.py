"""JSON documents for configurations and material parameters."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .elasticity import Material
from .geometry import Configuration, Grid, GeometryError
from .surface import SurfaceTensions


def _runs(row: np.ndarray) -> list[list[int]]:
    """Run-length encode a boolean row as ``[start, length]`` pairs."""
    out = []
    i, n = 0, len(row)
    while i < n:
        if row[i]:
            j = i
            while j < n and row[j]:
                j += 1
            out.append([i, j - i])
            i = j
        else:
            i += 1
    return out


def config_to_dict(cfg: Configuration) -> dict:
    g = cfg.grid
    A = cfg.composite.cells
    return {
        "grid": {"l": g.l, "L": g.L, "nx": g.nx, "ny": g.ny},
        "heights": list(cfg.substrate.profile.levels),
        "spikes": [list(s) for s in cfg.substrate.profile.spikes],
        "cracks": [list(e) for e in sorted(cfg.substrate.cracks)],
        # one entry per grid row (fixed j), runs along i
        "cells": [_runs(A[:, j]) for j in range(g.ny)],
        "slits": [list(e) for e in sorted(cfg.composite.slits)],
        "filaments": [list(e) for e in sorted(cfg.composite.filaments)],
    }


def config_from_dict(d: dict) -> Configuration:
    try:
        gd = d["grid"]
        g = Grid(float(gd["l"]), float(gd["L"]), int(gd["nx"]), int(gd["ny"]))
        cells = np.zeros((g.nx, g.ny), dtype=bool)
        rows = d["cells"]
        if len(rows) != g.ny:
            raise GeometryError(f"cells has {len(rows)} rows, grid has {g.ny}")
        for j, runs in enumerate(rows):
            for start, length in runs:
                cells[int(start):int(start) + int(length), j] = True
        edges = lambda key: [tuple(int(v) for v in e) for e in d.get(key, [])]  # noqa: E731
        return Configuration.build(g, [int(v) for v in d["heights"]],
                                   spikes=[tuple(int(v) for v in s) for s in d.get("spikes", [])],
                                   cracks=edges("cracks"), cells=cells,
                                   slits=edges("slits"), filaments=edges("filaments"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GeometryError):
            raise
        raise GeometryError(f"malformed configuration document: {exc}") from exc


def dumps_config(cfg: Configuration) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True) + "\n"


def loads_config(text: str) -> Configuration:
    return config_from_dict(json.loads(text))


def save_config(cfg: Configuration, path) -> None:
    Path(path).write_text(dumps_config(cfg))


def load_config(path) -> Configuration:
    return loads_config(Path(path).read_text())


def _load_json_or_inline(source: str):
    if source.lstrip().startswith(("{", "[")):
        return json.loads(source)
    p = Path(source)
    if p.exists():
        return json.loads(p.read_text())
    if "," in source:
        return [float(v) for v in source.split(",")]
    return json.loads(source)


def load_tensions(source: str) -> SurfaceTensions:
    """Tensions from a JSON file, inline JSON, or ``"phi_F,phi_S,phi_FS"``."""
    return SurfaceTensions.from_record(_load_json_or_inline(source))


def load_material(source: str) -> Material:
    rec = _load_json_or_inline(source)
    if isinstance(rec, list):
        if len(rec) != 2:
            raise ValueError("material shorthand is 'lam,mu'")
        return Material.homogeneous(*rec)
    return Material.from_record(rec)
