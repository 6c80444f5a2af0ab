import json

import numpy as np
import pytest

from sdri.analysis import random_configuration, random_tensions
from sdri.elasticity import Material
from sdri.geometry import GeometryError
from sdri.io import config_from_dict, config_to_dict, dumps_config, load_config, load_material, load_tensions, loads_config, save_config
from sdri.surface import SurfaceTensions


def same(a, b):
    return (a.grid == b.grid and a.substrate.profile == b.substrate.profile
            and a.substrate.cracks == b.substrate.cracks
            and np.array_equal(a.composite.cells, b.composite.cells)
            and a.composite.slits == b.composite.slits and a.composite.filaments == b.composite.filaments)


def test_roundtrip_random():
    rng = np.random.default_rng(51)
    for _ in range(100):
        cfg = random_configuration(rng)
        text = dumps_config(cfg)
        back = loads_config(text)
        assert same(cfg, back) and dumps_config(back) == text


def test_file_roundtrip(tmp_path, island_cfg):
    path = tmp_path / "c.json"
    save_config(island_cfg, path)
    assert same(load_config(path), island_cfg)


def test_document_fields(island_cfg):
    d = config_to_dict(island_cfg)
    assert set(d) == {"grid", "heights", "spikes", "cracks", "cells", "slits", "filaments"}
    assert d["cells"][:2] == [[[0, 4]], [[0, 4]]]
    assert d["cells"][2] == [[1, 2]] and d["cells"][3] == []
    assert d["grid"] == {"l": 1.0, "L": 1.0, "nx": 4, "ny": 4}


def test_malformed(island_cfg):
    d = config_to_dict(island_cfg)
    d["cells"] = d["cells"][:2]
    with pytest.raises(GeometryError):
        config_from_dict(d)
    with pytest.raises(GeometryError):
        config_from_dict({"grid": {}})


def test_tensions_forms(tmp_path):
    rng = np.random.default_rng(52)
    t = random_tensions(rng)
    path = tmp_path / "t.json"
    path.write_text(json.dumps(t.as_record()))
    assert load_tensions(str(path)).as_record() == t.as_record()
    assert load_tensions(json.dumps(t.as_record())).as_record() == t.as_record()
    assert load_tensions("1,1.5,0.5").as_record() == SurfaceTensions.isotropic(1, 1.5, 0.5).as_record()


def test_material_forms(tmp_path):
    assert load_material("2,1").as_record() == Material.homogeneous(2, 1).as_record()
    m = Material(1, 1, 2, 1.5, M0=[[0.01, 0], [0, 0.01]])
    path = tmp_path / "m.json"
    path.write_text(json.dumps(m.as_record()))
    assert load_material(str(path)).as_record() == m.as_record()
    with pytest.raises(ValueError):
        load_material("1,2,3")
