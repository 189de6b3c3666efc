import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rngbias import cli, dataio, hurst, markov
from rngbias.markov import MarkovParams


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def persistent_csv(tmp_path):
    path = tmp_path / "db.csv"
    dataio.write_records(dataio.synthesize(dataio.SynthSpec(seed=0, markov_params=MarkovParams(0.83, 0.83))), path)
    return path


def test_help_lists_flag_mapping(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--p11", "--z0", "--coverage", "--shuffles"):
        assert flag in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rngbias", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout


def test_simulate_sidecar(tmp_path):
    assert cli.main(["simulate", "--p11", "0.83", "--p00", "0.83", "--n-bits", "2000", "--seed", "4", "--out", str(tmp_path)]) == 0
    side = json.loads((tmp_path / "theory.json").read_text())
    assert side["theory"]["v_factor"] == pytest.approx(2.21, abs=0.005)
    assert side["theory"]["c1"] == pytest.approx(0.66)
    bits = np.array((tmp_path / "bits.txt").read_text().split(), dtype=np.uint8)
    np.testing.assert_array_equal(bits, markov.generate(MarkovParams(0.83, 0.83), 2000, 4).bits)


def test_simulate_memoryless_v(tmp_path):
    assert cli.main(["simulate", "--p11", "0.5", "--p00", "0.5", "--n-bits", "100", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "theory.json").read_text())["theory"]["v_factor"] == 1.0


def test_simulate_packed_and_deterministic(tmp_path):
    args = ["simulate", "--p11", "0.7", "--p00", "0.6", "--n-bits", "1001", "--seed", "9", "--packed"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")
    data = (tmp_path / "a" / "bits.bin").read_bytes()
    assert len(data) == 126
    np.testing.assert_array_equal(markov.unpack_bits(data, 1001), markov.generate(MarkovParams(0.7, 0.6), 1001, 9).bits)


def test_simulate_invalid_params_exit_2(tmp_path, capsys):
    assert cli.main(["simulate", "--p11", "1", "--p00", "1", "--seed", "1", "--out", str(tmp_path)]) == 2
    assert "absorbing" in capsys.readouterr().err


def test_missing_seed_is_printed(tmp_path, capsys):
    assert cli.main(["simulate", "--p11", "0.5", "--p00", "0.5", "--n-bits", "10", "--out", str(tmp_path)]) == 0
    err = capsys.readouterr().err
    seed = int(err.split("seed:")[1])
    assert json.loads((tmp_path / "theory.json").read_text())["seed"] == seed


def test_synth_to_stdout_and_file(tmp_path, capsys):
    assert cli.main(["synth", "--n-studies", "30", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    path = tmp_path / "s.csv"
    assert cli.main(["synth", "--n-studies", "30", "--seed", "2", "--out", str(path)]) == 0
    assert path.read_text() == out
    assert len(dataio.read_records(io.StringIO(out))) == 30


def test_synth_censor_band(tmp_path):
    path = tmp_path / "s.csv"
    assert cli.main(["synth", "--seed", "1", "--censor-band", "0,0.5", "--censor-max-n", "100000", "--out", str(path)]) == 0
    recs = dataio.read_records(path)
    assert all(r.pi >= 0.5 for r in recs if r.n_bits < 10**5)


def test_funnel_outputs(persistent_csv, tmp_path, capsys):
    out = tmp_path / "f"
    assert cli.main(["funnel", str(persistent_csv), "--out", str(out), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["fit"]["v_factor"] == pytest.approx(2.21, abs=0.15)
    assert sorted(p.name for p in out.iterdir()) == ["diagnostics.json", "envelopes.csv", "funnel.csv", "funnel.svg"]
    saved = json.loads((out / "diagnostics.json").read_text())
    assert saved == doc and saved["schema_version"] == "1.0"
    assert (out / "funnel.csv").read_text().startswith("N,pi,condition,inside_flag\n")


def test_funnel_chance_database(tmp_path):
    path = tmp_path / "c.csv"
    dataio.write_records(dataio.synthesize(dataio.SynthSpec(seed=5)), path)
    assert cli.main(["funnel", str(path), "--out", str(tmp_path / "f")]) == 0
    doc = json.loads((tmp_path / "f" / "diagnostics.json").read_text())
    s = doc["summary"]
    assert abs(s["mean_pi"] - 0.5) < 3 * s["mean_se"]
    assert doc["fit"]["v_factor"] == pytest.approx(1.0, abs=0.15)


def test_funnel_stdin(persistent_csv, tmp_path, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(persistent_csv.read_text()))
    assert cli.main(["funnel", "-", "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["funnel", str(persistent_csv), "--out", str(tmp_path / "b")]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_funnel_empty_csv_exit_2(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text(",".join(dataio.RECORD_COLUMNS) + "\n")
    assert cli.main(["funnel", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "no records" in capsys.readouterr().err


def test_funnel_bad_row_exit_2(tmp_path, capsys):
    path = tmp_path / "b.csv"
    path.write_text("study_id,n_bits,p_obs\na,100,oops\n")
    assert cli.main(["funnel", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_hurst_on_series_file(tmp_path):
    series = tmp_path / "g.txt"
    series.write_text("\n".join(repr(float(v)) for v in np.random.default_rng(0).standard_normal(380)) + "\n")
    out = tmp_path / "h"
    assert cli.main(["hurst", str(series), "--seed", "3", "--out", str(out)]) == 0
    doc = json.loads((out / "hurst.json").read_text())
    assert doc["h"] == pytest.approx(0.56, abs=0.08)
    assert len(doc["randomized"]["h_values"]) == 10
    assert (out / "rs.csv").read_text().startswith("window_n,rs_mean\n")
    assert (out / "rs_loglog.svg").exists()


def test_hurst_on_fgn_oracle(tmp_path):
    series = tmp_path / "f.txt"
    series.write_text("\n".join(repr(float(v)) for v in hurst.generate_fgn(0.8, 4096, seed=1)))
    assert cli.main(["hurst", str(series), "--seed", "1", "--out", str(tmp_path / "h")]) == 0
    h = json.loads((tmp_path / "h" / "hurst.json").read_text())["h"]
    assert 0.72 <= h <= 0.88


def test_hurst_on_records_reproducible(persistent_csv, tmp_path):
    args = ["hurst", str(persistent_csv), "--value", "z", "--shuffles", "5", "--seed", "8"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_hurst_explicit_windows(tmp_path):
    series = tmp_path / "g.txt"
    series.write_text(" ".join(map(str, np.random.default_rng(1).standard_normal(400))))
    assert cli.main(["hurst", str(series), "--windows", "10,20,50,100", "--seed", "1", "--out", str(tmp_path / "h")]) == 0
    pts = json.loads((tmp_path / "h" / "hurst.json").read_text())["points"]
    assert [p["window_n"] for p in pts] == [10, 20, 50, 100]


def test_hurst_too_short_exit_2(tmp_path, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("1\n2\n3\n"))
    assert cli.main(["hurst", "-", "--seed", "1", "--out", str(tmp_path / "h")]) == 2


def test_hurst_garbage_exit_2(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("1 2 x\n")
    assert cli.main(["hurst", str(p), "--seed", "1", "--out", str(tmp_path / "h")]) == 2


def test_missing_input_exit_3(tmp_path):
    assert cli.main(["funnel", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 3


def test_unwritable_out_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["simulate", "--p11", "0.5", "--p00", "0.5", "--seed", "1", "--out", str(blocker / "sub")]) == 3
    assert cli.main(["report", "--out", str(blocker / "sub")]) == 3


def test_outputs_stay_inside_out_dir(tmp_path, monkeypatch, persistent_csv):
    work = tmp_path / "work"
    work.mkdir()
    monkeypatch.chdir(work)
    cli.main(["simulate", "--p11", "0.6", "--p00", "0.6", "--n-bits", "50", "--seed", "1", "--out", "o1"])
    cli.main(["funnel", str(persistent_csv), "--out", "o2"])
    cli.main(["hurst", str(persistent_csv), "--seed", "1", "--out", "o3"])
    assert sorted(p.name for p in work.iterdir()) == ["o1", "o2", "o3"]
