import json
import os

import pytest

from sheetair.cli import main
from sheetair.graphbuild import build_graph
from sheetair.model import to_listing
from sheetair.workbook import load_workbook


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_listing_matches_library(sample_path, capsys):
    code, out, _ = run(capsys, "analyze", sample_path, "--threshold", "2")
    assert code == 0
    expected = to_listing(build_graph(load_workbook(sample_path), 2))
    assert out == expected
    assert "FORMULA GROUP: (PXII.Pdd PXII!D2:D30)" in out


def test_analyze_dot_to_file(sample_path, capsys, tmp_path):
    out_file = tmp_path / "g.dot"
    code, out, _ = run(
        capsys, "analyze", sample_path, "--threshold", "2", "--format", "dot",
        "--out", str(out_file),
    )
    assert code == 0 and out == ""
    text = out_file.read_text()
    assert text.startswith("digraph {")
    assert '"Clipper.Pdd" -> "Clipper.Ptotal";' in text


def test_analyze_json_round_trips(sample_path, capsys, tmp_path):
    out_file = tmp_path / "air.json"
    code, _, _ = run(
        capsys, "analyze", sample_path, "--threshold", "2", "--format", "json",
        "--out", str(out_file),
    )
    assert code == 0
    payload = json.loads(out_file.read_bytes())
    assert payload["version"] == 1 and payload["threshold"] == 2
    names = {g["name"] for g in payload["groups"]}
    assert "Clipper.Ptotal" in names


def test_analyze_missing_file_exit_1(capsys):
    code, _, err = run(capsys, "analyze", "missing.xlsx")
    assert code == 1
    assert "missing file" in err


def test_show_cell(sample_path, capsys):
    code, out, _ = run(capsys, "show", sample_path, "--threshold", "2", "--cell", "Flash!B30")
    assert code == 0
    assert out.splitlines()[0] == "RAW GROUP: (Flash.IIO Flash!B2:B30)"


def test_show_group_formula(sample_path, capsys):
    code, out, _ = run(
        capsys, "show", sample_path, "--threshold", "2", "--group", "Clipper.Ptotal"
    )
    assert code == 0
    assert "formula: =SUM(Clipper.Pdd,Clipper.PCS)" in out


def test_show_unknown_group_exit_2(sample_path, capsys):
    code, _, err = run(capsys, "show", sample_path, "--group", "X.Y")
    assert code == 2
    assert "X.Y" in err


def test_show_empty_cell_exit_2(sample_path, capsys):
    code, _, err = run(capsys, "show", sample_path, "--threshold", "2", "--cell", "Flash!A1")
    assert code == 2
    assert "no group at" in err


def test_env_threshold_default(sample_path, capsys, monkeypatch):
    monkeypatch.setenv("AIR_THRESHOLD", "2")
    code, out, _ = run(capsys, "analyze", sample_path)
    assert code == 0
    assert "FORMULA GROUP: (Clipper.Ptotal Clipper!H2:H30)" in out
    monkeypatch.setenv("AIR_THRESHOLD", "0")
    code, out, _ = run(capsys, "analyze", sample_path)
    assert "FORMULA GROUP: (Clipper.Ptotal Clipper!H2:H30)" not in out


def test_edit_script_applies_paper_edits(sample_path, capsys, tmp_path):
    script = tmp_path / "edits.txt"
    script.write_text(
        "# the four case-study edits\n"
        "set Clipper.Ptotal =(Clipper.PCS + PXII.Pdd)*2 * Flash.PM\n"
        "add Summary Rdd2 E2:E30 =cos(PXII.Ptotal * Flash.Ptotal)\n"
        "set Summary.avg =average(Summary.Pavg[1:28])\n"
        "set Clipper.Pdd =Clipper.Idd * Clipper.Vdd * 2\n"
    )
    out_file = tmp_path / "sample_Edited.xlsx"
    code, _, _ = run(
        capsys, "edit", sample_path, "--threshold", "2",
        "--script", str(script), "--out", str(out_file),
    )
    assert code == 0 and out_file.exists()
    edited = load_workbook(str(out_file))
    assert edited.get("Clipper", 4, 2).formula == "=B2*C2*2"
    assert edited.get("Summary", 5, 1).value == "Rdd2"
    assert edited.get("Summary", 2, 32).formula == "=AVERAGE($B$2:$B$29)"


def test_edit_empty_script_output_equals_input(sample_path, capsys, tmp_path):
    script = tmp_path / "empty.txt"
    script.write_text("\n# nothing\n")
    out_file = tmp_path / "copy.xlsx"
    code, _, _ = run(
        capsys, "edit", sample_path, "--threshold", "2",
        "--script", str(script), "--out", str(out_file),
    )
    assert code == 0
    assert load_workbook(str(out_file)) == load_workbook(sample_path)


def test_edit_error_reports_line_and_writes_nothing(sample_path, capsys, tmp_path):
    script = tmp_path / "bad.txt"
    script.write_text(
        "set Clipper.Ptotal =Clipper.PCS*2\n"
        "# comment line\n"
        "set Ghost.Group =1\n"
    )
    out_file = tmp_path / "never.xlsx"
    code, _, err = run(
        capsys, "edit", sample_path, "--threshold", "2",
        "--script", str(script), "--out", str(out_file),
    )
    assert code == 2
    assert "line 3" in err
    assert not out_file.exists()


def test_negative_threshold_rejected(sample_path, capsys):
    code, _, err = run(capsys, "analyze", sample_path, "--threshold", "-1")
    assert code == 2
    assert "threshold" in err
