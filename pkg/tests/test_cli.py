import io
import json

import pandas as pd
import pytest
from numpy.testing import assert_allclose

from dynamics.poincare import Table1Row
from geometry.catalog import dump_catalog, expected_classification, get_space
from reports.cli import EXIT_ERROR, EXIT_MISMATCH, EXIT_OK, main
from reports.tables import render_table1, table1_frame

G2 = "G2/U(2)#r2"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_catalog_text(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == EXIT_OK
    assert "E8/U(1)xSU(4)xSU(5)  r=5  N=6  dims=(80,60,40,20,8)\n" in out
    assert "G2/U(2)#r2  r=2  N=2  dims=" in out
    assert len(out.splitlines()) == 15


def test_catalog_json(capsys):
    code, out, _ = run(capsys, "catalog", "--format", "json")
    assert code == EXIT_OK
    records = json.loads(out)
    assert records[0]["name"] == G2
    assert {"name", "r", "dims", "N", "constants"} <= set(records[0])


def test_export_catalog(tmp_path, capsys):
    target = tmp_path / "catalog.json"
    code, out, _ = run(capsys, "export-catalog", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    doc = json.loads(target.read_text(encoding="utf-8"))
    assert "catalog_version" in doc
    assert len(doc["spaces"]) == 15


def test_fixed_points_json(capsys):
    code, out, _ = run(capsys, "fixed-points", "--space", G2)
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["N"] == 2
    assert [p["exact_lambda"] for p in report["points"]] == ["3/8", "11/24"]
    assert [(p["d_stb"], p["d_unstb"]) for p in report["points"]] == [(1, 1), (0, 2)]


def test_einstein_from_dims(capsys):
    code, out, _ = run(capsys, "einstein", "--dims", "8,2", "--format", "csv")
    assert code == EXIT_OK
    df = pd.read_csv(io.StringIO(out))
    assert list(df.columns) == ["j", "x1", "x2", "lambda", "exact_lambda", "kahler_einstein"]
    assert df["exact_lambda"].tolist() == ["3/8", "11/24"]
    assert_allclose(df["x2"], [2.0, 2 / 3], rtol=1e-12)


def test_flow_csv(capsys):
    code, out, _ = run(capsys, "flow", "--space", G2, "--x0", "1,2", "--t1", "1.3")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "t,x1,x2,scal"
    assert lines[-1] == "# terminated_by=t_end_reached"
    t, x1, x2, scal = (float(v) for v in lines[-2].split(","))
    assert t == 1.3
    assert_allclose([x1, x2], [0.025, 0.05], atol=1e-7)
    assert scal == pytest.approx(120 / (32 - 24 * 1.3), rel=1e-6)


def test_backward_flow_csv_runs_forward_in_time(capsys):
    code, out, _ = run(capsys, "flow", "--space", G2, "--x0", "1,1", "--t1", "-2")
    assert code == EXIT_OK
    df = pd.read_csv(io.StringIO(out), comment="#")
    assert list(df.columns) == ["t", "x1", "x2", "scal"]
    assert df["t"].is_monotonic_increasing
    assert df["t"].iloc[0] == -2.0 and df["t"].iloc[-1] == 0.0
    assert_allclose(df[["x1", "x2"]].iloc[-1], [1.0, 1.0])
    assert out.splitlines()[-1] == "# terminated_by=t_end_reached"


def test_flow_to_file(tmp_path, capsys):
    target = tmp_path / "flow.csv"
    code, out, _ = run(capsys, "flow", "--dims", "8,2", "--x0", "1,1", "--t1", "0.5",
                       "--with-ricci", "--out", str(target))
    assert code == EXIT_OK
    assert out == ""
    header = target.read_text(encoding="utf-8").splitlines()[0]
    assert header == "t,x1,x2,scal,ric1,ric2"


def test_ancient_scal_only(capsys):
    code, out, _ = run(capsys, "ancient", "--space", G2, "--scal-only",
                       "--t0", "-1", "--t1", "1", "--steps", "5")
    assert code == EXIT_OK
    df = pd.read_csv(io.StringIO(out))
    assert list(df.columns) == ["t", "scal"]
    assert_allclose(df["scal"], 120 / (32 - 24 * df["t"]), rtol=1e-10)


@pytest.mark.parametrize(
    "argv",
    [
        ["fixed-points", "--space", "Nope/U(1)"],
        ["ancient", "--space", G2, "--index", "9"],
        ["einstein", "--space", G2, "--dims", "8,2"],
        ["flow", "--space", G2, "--x0", "1,a", "--t1", "1"],
        ["flow", "--space", G2, "--x0", "1,2,3", "--t1", "1"],
        ["einstein", "--dims", "8"],
    ],
)
def test_errors_exit_with_two(argv, capsys):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_ERROR
    assert err.startswith("error:")


def test_table1_on_a_small_catalog(tmp_path, monkeypatch, capsys):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(dump_catalog([get_space(G2), get_space("M*")])), encoding="utf-8")
    monkeypatch.setenv("HRF_CATALOG_PATH", str(path))
    code, out, _ = run(capsys, "table1")
    assert code == EXIT_OK
    assert "j=5: d_unstb=3 d_stb=1" in out
    assert "MISMATCH" not in out


def test_table1_full_catalog(capsys):
    code, out, err = run(capsys, "table1")
    assert code == EXIT_OK
    assert len(out.splitlines()) == 16
    assert "MISMATCH" not in out
    assert "j=5: d_unstb=3 d_stb=1" in out
    assert "j=5: d_unstb=3 d_stb=2" in out
    assert "j=4: d_unstb=3 d_stb=3" in out
    assert "N expected" not in err
    assert "(d_stb, d_unstb) expected" not in err


def test_table1_mismatch_is_reported_once_on_stderr(tmp_path, monkeypatch, capsys):
    doc = dump_catalog([get_space(G2)])
    doc["spaces"][0]["N"] = 3
    path = tmp_path / "wrong.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    monkeypatch.setenv("HRF_CATALOG_PATH", str(path))
    code, out, err = run(capsys, "table1")
    assert code == EXIT_MISMATCH
    assert "MISMATCH" in out
    line = f"{G2}: N expected 3, found 2"
    assert line not in out
    assert err.count(line) == 1


# ---------- Table rendering ----------

def test_table1_frame_columns():
    mstar = get_space("M*")
    expected = tuple(expected_classification(mstar))
    df = table1_frame([Table1Row(mstar, expected, expected)])
    row = df.iloc[0]
    assert (row["N"], row["d1_unstb"], row["d1_stb"], row["dj_unstb"], row["dj_stb"]) == (5, 1, 3, 2, 2)
    assert row["exceptions"] == "j=5: d_unstb=3 d_stb=1"
    assert row["match"] == "ok"


def test_table1_reports_mismatches_and_errors():
    g2 = get_space(G2)
    rows = [
        Table1Row(g2, ((1, 1),), ((1, 1), (0, 2))),
        Table1Row(g2, (), ((1, 1), (0, 2)), error="no roots"),
    ]
    df = table1_frame(rows)
    assert df["match"].tolist() == ["MISMATCH", "MISMATCH"]
    assert rows[0].diff() == [f"{G2}: N expected 2, found 1"]
    assert rows[1].diff() == [f"{G2}: no roots"]
    text = render_table1(rows)
    assert text.count("MISMATCH") == 2
    assert "expected 2" not in text


def test_table1_frame_empty():
    assert list(table1_frame([]).columns) == [
        "r", "space", "N", "d1_unstb", "d1_stb", "dj_unstb", "dj_stb", "exceptions", "match",
    ]
