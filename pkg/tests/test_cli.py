"""Command-line behaviour: outputs, exit codes, determinism."""

import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from qsnp import cli
from qsnp.checks import CheckResult

ROOT = Path(__file__).resolve().parents[1]


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# -- exit codes ---------------------------------------------------------------


def test_malformed_config_exits_2_without_writing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out, svg = tmp_path / "o.csv", tmp_path / "o.svg"
    assert run("dispersion", "--config", bad, "--out", out, "--svg", svg) == 2
    assert not out.exists() and not svg.exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.json"]


def test_unknown_key_exits_2(tmp_path):
    doc = json.loads((ROOT / "configs" / "amplifier.json").read_text())
    doc["medium"]["colour"] = "blue"
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    assert run("snr", "--config", p, "--out", tmp_path / "o.csv") == 2
    assert not (tmp_path / "o.csv").exists()


def test_group_velocity_pole_exits_3(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert run("snr", "--delta", 0.5, "--out", out) == 3
    assert "domain error" in capsys.readouterr().err
    assert not out.exists()


def test_unwritable_output_exits_2(tmp_path):
    assert run("sf", "--points", 5, "--out", tmp_path / "missing" / "o.csv") == 2


def test_nonpositive_threads_rejected():
    assert run("--threads", 0, "sf", "--points", 5) == 2


def test_selftest_exit_code_reflects_failures(monkeypatch, capsys):
    import qsnp.checks as checks

    ok = CheckResult(1, "ok", True, 0.0, "<= 1", 0.0)
    bad = CheckResult(2, "bad", False, 2.0, "<= 1", 0.0)
    monkeypatch.setattr(checks, "run_all", lambda quick=False: [ok, bad])
    assert run("selftest", "--quick") == 1
    text = capsys.readouterr().out
    assert "1/2 checks passed" in text
    monkeypatch.setattr(checks, "run_all", lambda quick=False: [ok])
    assert run("selftest") == 0


# -- outputs --------------------------------------------------------------------


def test_dispersion_csv(tmp_path):
    out = tmp_path / "d.csv"
    assert run("dispersion", "--delta-min", 2, "--delta-max", 10, "--points", 9, "--out", out) == 0
    header, data = read_csv(out)
    assert header[:2] == ["delta", "delta_over_omega_p"]
    vg = data[:, header.index("v_g_over_c")]
    assert np.all(vg > 1) and np.all(np.diff(vg) < 0)


def test_svg_is_deterministic_and_has_one_polyline_per_series(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for p in (a, b):
        assert run("sf", "--points", 40, "--svg", p, "--out", tmp_path / "s.csv") == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.count('class="series"') == 2
    assert text.count('class="legend"') == 2


def test_decompose_outputs_and_shading(tmp_path):
    out, svg = tmp_path / "d.csv", tmp_path / "d.svg"
    assert run("decompose", "--out", out, "--svg", svg) == 0
    header, data = read_csv(out)
    assert header == ["x", "incident_abs2", "transmitted_abs2", "truncated_abs2", "residual_abs2"]
    text = svg.read_text()
    assert 'class="shaded"' in text
    assert "x &gt; cT" in text
    assert text.count('class="series"') == 4


def test_decompose_input_round_trip(tmp_path, capsys):
    first = tmp_path / "first.csv"
    assert run("decompose", "--out", first, "--dump", tmp_path / "f") == 0
    for key in ("psi0", "psi", "phi", "r"):
        assert (tmp_path / f"f.{key}.bin").exists()
    capsys.readouterr()
    second = tmp_path / "second.csv"
    assert run("decompose", "--input", tmp_path / "f.psi0.bin", "--out", second) == 0
    assert "tail reconstruction error" in capsys.readouterr().out
    _, a = read_csv(first)
    _, b = read_csv(second)
    assert a.shape == b.shape
    np.testing.assert_array_equal(a[:, :2], b[:, :2])


def test_snr_stdout_csv(capsys):
    assert run("snr", "--delta", 4, "--q", 3) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][0] == "param" and "peak_snr" in rows[0]
    assert len(rows) == 2
    assert float(rows[1][rows[0].index("q")]) == 3.0


def test_snr_at_fixed_advance_falls_with_detuning(tmp_path):
    out = tmp_path / "s.csv"
    assert run("snr", "--advance", 10, "--sweep", "delta:2:20:10", "--out", out) == 0
    header, data = read_csv(out)
    peak = data[:, header.index("peak_snr")]
    assert np.all(np.diff(peak) < 0)


def test_snr_bad_sweep_name(tmp_path):
    assert run("snr", "--sweep", "colour:1:2:3", "--out", tmp_path / "s.csv") == 2


def test_propagate_reports_group_velocity(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert run("propagate", "--n-points", 4096, "--dx", 0.1, "--x0", -50, "--times", "0,5,10", "--out", out) == 0
    header, data = read_csv(out)
    assert header == ["t", "centroid"]
    v = np.polyfit(data[:, 0], data[:, 1], 1)[0]
    assert v == pytest.approx(5 / np.sqrt(24), rel=1e-2)


def test_mb_ensemble_csv_and_thread_independence(tmp_path, monkeypatch):
    common = ("mb-ensemble", "--realizations", 12, "--n-z", 32, "--seed", 3, "--max-rows", 20)
    one, many, env = tmp_path / "1.csv", tmp_path / "4.csv", tmp_path / "e.csv"
    assert run("--threads", 1, *common, "--out", one) == 0
    assert run("--threads", 4, *common, "--out", many) == 0
    monkeypatch.setenv("QSNP_THREADS", "3")
    assert run(*common, "--out", env) == 0
    header, _ = read_csv(one)
    assert header == ["t", "mean_intensity", "stderr", "analytic_reference"]
    assert one.read_bytes() == many.read_bytes() == env.read_bytes()


def test_mb_ensemble_needs_two_realizations(tmp_path):
    assert run("mb-ensemble", "--realizations", 1, "--out", tmp_path / "m.csv") == 2


def test_installed_entry_point():
    res = subprocess.run([sys.executable, "-m", "qsnp.cli", "snr", "--delta", "0.5"], capture_output=True, text=True)
    assert res.returncode == 3


# -- configuration documents ----------------------------------------------------


@pytest.fixture(scope="module")
def schema():
    return json.loads((ROOT / "schema" / "config.schema.json").read_text())


@pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "configs").glob("*.json")))
def test_shipped_configs_match_schema(schema, name):
    jsonschema.validate(json.loads((ROOT / "configs" / name).read_text()), schema)


def test_schema_rejects_unknown_keys(schema):
    doc = json.loads((ROOT / "configs" / "amplifier.json").read_text())
    doc["extra"] = 1
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, schema)


@pytest.mark.parametrize("name", ["amplifier.json", "superfluorescence.json"])
def test_shipped_configs_load(tmp_path, name):
    assert run("dispersion", "--config", ROOT / "configs" / name, "--points", 3, "--out", tmp_path / "d.csv") == 0
