import csv
import json
import subprocess
import sys

import pytest

from splitnvd.cli import main


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_dmt_curve(tmp_path, capsys):
    out = tmp_path / "dmt"
    assert main(["dmt-curve", "--N", "2", "--nt", "2", "--nr", "2", "--out", str(out)]) == 0
    rows = _rows(f"{out}.csv")
    assert rows[0] == ["r", "d_split", "d_parallel"]
    table = {r: (s, p) for r, s, p in rows[1:]}
    assert len(table) == 9
    assert table["0"] == ("8", "8") and table["1"] == ("3", "2") and table["2"] == ("0", "0")
    assert table["0.25"] == ("6.5625", "6.125")
    assert "r,d_split,d_parallel" in capsys.readouterr().out


def test_verify_lemma2(tmp_path, capsys):
    code = main(["verify", "lemma2", "--instances", "1000", "--seed", "7", "--out", str(tmp_path / "l2")])
    assert code == 0
    assert "0 violations" in capsys.readouterr().out
    doc = json.loads((tmp_path / "l2.json").read_text())
    assert doc["result"]["violations"] == 0


def test_verify_power_and_theta(tmp_path):
    assert main(["verify", "power", "--out", str(tmp_path / "p")]) == 0
    assert main(["verify", "theta", "--instances", "100", "--out", str(tmp_path / "t")]) == 0


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["wer", "--config", str(tmp_path / "missing.toml")]) == 2
    assert "not found" in capsys.readouterr().err


def test_bad_arguments_exit_2(tmp_path):
    assert main(["wer", "--bits", "two"]) == 2
    assert main(["wer", "--scheme", "split", "--bits", "1", "--snr-db", "5,1", "--out", str(tmp_path / "w")]) == 2
    assert main(["wer", "--scheme", "block_diag", "--bits", "4", "--snr-db", "5", "--trials", "2",
                 "--out", str(tmp_path / "w")]) == 2


def test_config_key_error_message(tmp_path, capsys):
    p = tmp_path / "c.toml"
    p.write_text("[sim]\ntrails = 5\n")
    assert main(["outage", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "trails" in err and "line 2" in err


def test_mode_mismatch_is_config_error(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[sim]\nmode = "wer"\nsnr_db = [0]\n')
    assert main(["outage", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_wer_replay_bit_identical(tmp_path, capsys):
    a = tmp_path / "a"
    args = ["wer", "--scheme", "split", "--bits", "1", "--snr-db", "0,10", "--trials", "300",
            "--seed", "11", "--workers", "1", "--out", str(a)]
    assert main(args) == 0
    assert "wer: 2 points" in capsys.readouterr().out
    b = tmp_path / "b"
    assert main(["wer", "--config", f"{a}.json", "--workers", "2", "--out", str(b)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_outage_from_toml(tmp_path, capsys):
    p = tmp_path / "o.toml"
    p.write_text('[channel]\nN = 2\nnt = 1\nnr = 1\n[sim]\nsnr_db = [0, 10, 20]\ntrials = 200000\n'
                 'rate = 1.0\nseed = 2\n[output]\nformat = "csv"\n'
                 f'path = "{tmp_path / "o"}"\n')
    assert main(["outage", "--config", str(p)]) == 0
    assert (tmp_path / "o.csv").exists() and not (tmp_path / "o.json").exists()
    assert "slope" in capsys.readouterr().out


def test_nvd_commands(tmp_path):
    assert main(["nvd", "min-det", "--bits", "1", "--out", str(tmp_path / "m")]) == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["report"]["min_exact_detsq"] == 6400
    assert main(["nvd", "criterion", "--out", str(tmp_path / "c")]) == 0
    assert main(["nvd", "criterion", "--schedule", "2,4", "--out", str(tmp_path / "s")]) == 0
    # an impossible exponent requirement is a verification failure
    assert main(["nvd", "criterion", "--schedule", "2,4", "--slack", "0", "--r", "0.5",
                 "--out", str(tmp_path / "s2")]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "splitnvd", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "splitnvd" in res.stdout
