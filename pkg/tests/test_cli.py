import hashlib
import json
import math
import subprocess
import sys

import jsonschema
import pytest

from yoccoz.cli import dumps, load_schema, main, parse_c
from yoccoz.mask import RegionMask

CASES = {
    "render": (["render", "--c", "0,1", "--res", "64"], ["render.json"]),
    "puzzle": (["puzzle", "--c", "0,1", "--depth", "3", "--res", "256", "--masks"], ["puzzle.json"]),
    "tableau": (["tableau", "--c", "-2,0", "--depth", "4", "--res", "512"], ["tableau.json"]),
    "moduli": (["moduli", "--c", "0,1", "--depth", "3", "--res", "256"], ["moduli.json"]),
    "area": (["area", "--c", "-2,0", "--depth", "3", "--res", "256"], []),
    "renorm": (["renorm", "--c", "-1.754877666246693,0", "--depth", "9", "--res", "1024"], ["plm.json"]),
}


def run(argv, out):
    return main(argv + ["--out-dir", str(out)])


@pytest.mark.parametrize("name", list(CASES))
def test_outputs_validate(name, tmp_path):
    argv, docs = CASES[name]
    assert run(argv, tmp_path) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    jsonschema.validate(man, load_schema("manifest"))
    assert man["subcommand"] == name
    for fname, digest in man["outputs"].items():
        assert hashlib.sha256((tmp_path / fname).read_bytes()).hexdigest() == digest
    for doc in docs:
        schema = load_schema(doc.split(".")[0])
        jsonschema.validate(json.loads((tmp_path / doc).read_text()), schema)


def test_puzzle_masks_readable(tmp_path):
    assert run(CASES["puzzle"][0], tmp_path) == 0
    m = RegionMask.from_bytes((tmp_path / "masks" / "critical_02.mask").read_bytes())
    assert m.grid.shape == (256, 256) and m.contains(0j)


def test_area_csv_and_stdout(tmp_path, capsys):
    assert run(CASES["area"][0], tmp_path) == 0
    assert "julia area upper bound" in capsys.readouterr().out
    lines = (tmp_path / "area.csv").read_text().splitlines()
    assert lines[0] == "level,area,ratio,M_n,exp_minus_bM"
    assert len(lines) == 5


def test_renorm_document(tmp_path):
    assert run(CASES["renorm"][0] + ["--cantor", "2"], tmp_path) == 0
    doc = json.loads((tmp_path / "plm.json").read_text())
    assert doc["returns"][0] == 3
    assert doc["pieces"][0]["degree"] == 2 and doc["pieces"][0]["l"] == 3
    assert all(doc["checks"].values())
    assert len(doc["cantor"]["max_diameter"]) == 3


def test_tableau_document(tmp_path):
    assert run(CASES["tableau"][0], tmp_path) == 0
    doc = json.loads((tmp_path / "tableau.json").read_text())
    assert doc["verdict"] == "NonRecurrentAtDepth"
    assert doc["marks"][0][0] == "1"


def test_render_digest(tmp_path, frozen):
    subprocess.run([sys.executable, "-m", "yoccoz", "render", "--c", "0,1", "--res", "256",
                    "--out-dir", str(tmp_path)], check=True)
    assert hashlib.sha256((tmp_path / "render.png").read_bytes()).hexdigest() == frozen["render_i_256_sha256"]


@pytest.mark.parametrize("argv", [
    ["puzzle", "--c", "0,0", "--depth", "2", "--res", "64"],  # alpha attracting
    ["puzzle", "--c", "0.25,0", "--depth", "2", "--res", "64"],  # double fixed point
    ["renorm", "--c", "-2,0", "--depth", "4", "--res", "256"],  # no first-return map
    ["tableau", "--c", "0.5,0", "--depth", "2", "--res", "64"],  # escaping critical orbit
])
def test_precondition_exit_code(argv, tmp_path, capsys):
    assert run(argv, tmp_path) == 2
    assert capsys.readouterr().err
    assert not (tmp_path / "manifest.json").exists()


@pytest.mark.parametrize("argv", [
    ["puzzle", "--c", "0,1", "--res", "0"],
    ["puzzle", "--c", "1"],
    ["puzzle", "--c", "nan,0"],
    ["frobnicate"],
])
def test_usage_exit_code(argv, tmp_path):
    assert run(argv, tmp_path) == 2


def test_io_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["render", "--c", "0,1", "--res", "16", "--out-dir", str(blocker / "sub")]) == 1


def test_parse_c():
    assert parse_c("-2,0") == -2
    assert parse_c("0,1") == 1j
    assert parse_c("-1.754877666246693,0").real == -1.754877666246693


def test_dumps():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(1.0) == "1.0"
    assert dumps(math.inf) == '"Infinite"'
    assert json.loads(dumps({"a": [1, 2.5, None], "b": {"c": True}})) == {"a": [1, 2.5, None], "b": {"c": True}}
    assert float(dumps(math.pi)) == math.pi
