import json
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from ricci_forge import plotting
from ricci_forge.curvature import positivity_scan, round_sphere_spec
from ricci_forge.io import dumps, plain, read_json, write_json, write_text_atomic
from ricci_forge.skewalg import BoundaryType


def test_plain_conversions():
    out = plain({"a": np.float64(1.5), "b": np.arange(3), "c": math.nan, "d": math.inf,
                 "e": Fraction(1, 3), "f": BoundaryType.HOMOTOPY_SPHERE, "g": (np.bool_(True),), "z": np.array(2.5)})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": "Infinity", "e": "1/3",
                   "f": "HomotopySphere", "g": [True], "z": 2.5}


def test_dumps_is_deterministic():
    a = dumps({"z": 1, "a": [0.1, 2]})
    b = dumps({"a": [0.1, 2], "z": 1})
    assert a == b and a.endswith("\n")
    assert json.loads(a) == {"a": [0.1, 2], "z": 1}


def test_atomic_write_and_read(tmp_path):
    p = write_json(tmp_path / "sub" / "x.json", {"k": Fraction(2, 4)})
    assert read_json(p) == {"k": "1/2"}
    write_text_atomic(tmp_path / "b.bin", b"\x00\x01")
    assert (tmp_path / "b.bin").read_bytes() == b"\x00\x01"
    assert sorted(x.name for x in tmp_path.iterdir()) == ["b.bin", "sub"]


def test_render_scan_next_to_csv(tmp_path):
    rep = positivity_scan(round_sphere_spec(1, 1), grid_step=0.05)
    csv = write_text_atomic(tmp_path / "s.csv", rep.to_csv())
    data = plotting.read_scan_csv(csv)
    assert len(data["t"]) == len(rep.samples)
    png = plotting.render_scan(csv, title="round")
    assert png == tmp_path / "s.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_render_is_byte_stable(tmp_path):
    spec = round_sphere_spec(2, 2)
    a = plotting.render_profiles(spec, tmp_path / "a.png", title="x").read_bytes()
    b = plotting.render_profiles(spec, tmp_path / "b.png", title="x").read_bytes()
    assert a == b


def test_core_import_does_not_load_matplotlib():
    code = (
        "import sys, ricci_forge.curvature, ricci_forge.pipeline, ricci_forge.cli, ricci_forge.plotting;"
        "print('matplotlib' in sys.modules)"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
