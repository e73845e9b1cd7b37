import csv
import io
import json
import subprocess
import sys

import pytest

from ccrlab.cli import main
from ccrlab.config import bundled_scenarios, load_config, parse_config
from ccrlab.errors import ParseError

Q2 = """
seed = 3
[cone]
generators = [["1", "0"], ["0", "1"]]
[functional]
e = ["1", "1"]
[lattice]
basis = [["1", "-1"]]
"""


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _strip(report):
    doc = json.loads(report)
    doc.pop("wallTime")
    return doc


@pytest.fixture
def q2_file(tmp_path):
    p = tmp_path / "q2.toml"
    p.write_text(Q2)
    return p


def test_bundled_scenarios_listed():
    names = bundled_scenarios()
    assert {"q2_rank1.toml", "orthant_nolattice.toml", "q3_rank2.toml"} <= set(names)


def test_run_passes_and_is_deterministic(q2_file, tmp_path, capsys):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert _run(["run", str(q2_file), "--out", str(out1)], capsys)[0] == 0
    assert _run(["run", str(q2_file), "--out", str(out2), "--threads", "2"], capsys)[0] == 0
    r1, r2 = _strip(out1.read_text()), _strip(out2.read_text())
    assert r1 == r2
    assert r1["schema"] == "ccrlab-report/1" and r1["status"] == "pass"
    assert [r["name"] for r in r1["records"]] == ["cone", "pspace", "rep", "fock", "cocycles", "index", "classify"]
    assert all(r["paperRef"] for r in r1["records"])


def test_run_csv(q2_file, capsys):
    code, out, _ = _run(["run", str(q2_file), "--csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["check", "status", "metric", "value"]
    assert {r[0] for r in rows[1:]} >= {"cone", "index"}


def test_json_and_csv_are_exclusive(q2_file, capsys):
    assert _run(["run", str(q2_file), "--csv", "--json"], capsys)[0] == 2


def test_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(Q2 + "\nbogus = 1\n")
    assert _run(["run", str(bad)], capsys)[0] == 2
    bad.write_text(Q2.replace('"1", "-1"', '"0.5", "-0.5"'))
    assert _run(["run", str(bad)], capsys)[0] == 2
    bad.write_text("[cone\n")
    assert _run(["run", str(bad)], capsys)[0] == 2
    assert _run(["run", str(tmp_path / "missing.toml")], capsys)[0] == 2
    assert _run(["frobnicate"], capsys)[0] == 2
    # a lattice that is not orthogonal to e is a parse-level rejection
    bad.write_text(Q2.replace('"1", "-1"', '"1", "0"'))
    assert _run(["index", str(bad)], capsys)[0] == 2


def test_parse_config_accepts_decimal_grid_extents():
    doc = {
        "cone": {"generators": [["1", "0"], ["0", "1"]]},
        "functional": {"e": "auto"},
        "lattice": {"basis": [["1", "-1"]]},
        "grid": {"yLo": [-0.75], "yHi": ["1.25"], "h": "1/4", "M": 8, "ladder": [2, 4, 6, 8]},
    }
    cfg = parse_config(doc)
    assert cfg.grid.yLo[0] == -0.75 and cfg.e == "auto"
    doc["grid"]["h"] = 0.25
    with pytest.raises(ParseError):
        parse_config(doc)


def test_hash_ignores_formatting(tmp_path):
    a, b = tmp_path / "a.toml", tmp_path / "b.toml"
    a.write_text(Q2)
    b.write_text(Q2.replace('"1", "-1"', '"2/2", "-1"') + "\n# comment\n")
    assert load_config(a).digest() == load_config(b).digest()


def test_classify_subcommand(capsys):
    code, out, _ = _run(["classify", "q2_a.toml", "q2_b.toml"], capsys)
    assert code == 0 and out.strip() == "equivalent: true"
    code, out, _ = _run(["classify", "q2_rank1.toml", "q2_a.toml", "--json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["equivalent"] is False and doc["spectrumB"] == "Cyclic(2)"


def test_small_subcommands(capsys):
    code, out, _ = _run(["index", "q2_rank1.toml"], capsys)
    assert code == 0 and "index: 1" in out
    code, out, _ = _run(["index", "orthant_nolattice.toml"], capsys)
    assert code == 0 and "refused" in out
    code, out, _ = _run(["cocycles", "q2_rank1.toml", "--json"], capsys)
    assert json.loads(out)["dim"] == 1
    code, out, _ = _run(["boundary", "q2_rank1.toml"], capsys)
    assert out.startswith("compact: true")
    code, out, _ = _run(["verify-fock", "q2_rank1.toml"], capsys)
    assert code == 0 and out.startswith("fock: pass")


def test_exports(tmp_path, capsys):
    code, out, _ = _run(["export", "q2_rank1.toml", "--what", "gram"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9 and all(len(r) == 9 for r in rows)
    assert _run(["export", "q2_rank1.toml", "--what", "masks"], capsys)[0] == 2
    mfile = tmp_path / "m.npz"
    assert _run(["export", "q2_rank1.toml", "--what", "masks", "--out", str(mfile)], capsys)[0] == 0
    assert mfile.exists()
    code, out, _ = _run(["export", "q2_rank1.toml", "--what", "matrices"], capsys)
    assert code == 0 and out.splitlines()[0].split(",")[:2] == ["row", "col"]


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "ccrlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("ccrlab ")


def test_bundled_expected_outcomes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert _run(["run", "q2_rank1.toml", "--out", str(out)], capsys)[0] == 0
    recs = {r["name"]: r for r in json.loads(out.read_text())["records"]}
    assert recs["index"]["metrics"]["index"] == 1
    assert _run(["run", "orthant_nolattice.toml", "--out", str(out)], capsys)[0] == 0
    recs = {r["name"]: r for r in json.loads(out.read_text())["records"]}
    assert recs["cocycles"]["status"] == "pass"
    assert recs["cocycles"]["metrics"]["hasNonzeroCocycle"] is False
    assert recs["cocycles"]["metrics"]["expectedOutcome"] is True


def test_boundary_reason_text(capsys):
    code, out, _ = _run(["boundary", "q3_rank1.toml"], capsys)
    assert code == 0 and out.startswith("compact: false") and "d_eff=2" in out
