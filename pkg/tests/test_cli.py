import json

import pytest

from sturmkit import __version__
from sturmkit.cli import main
from sturmkit.words import Word


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_word_sn(capsys):
    assert run(capsys, "word", "--preset", "fibonacci", "--sn", "5") == (0, "10110101\n", "")


def test_word_rotation_with_negative_range(capsys):
    code, out, _ = run(capsys, "word", "--preset", "golden", "--rotation", "--theta", "0.25",
                       "--range", "-5:5")
    assert code == 0 and len(out.strip()) == 11 and set(out.strip()) <= {"0", "1"}


def test_packed_output_round_trips(tmp_path, capsys):
    f = tmp_path / "w.bin"
    assert main(["word", "--preset", "silver", "--prefix", "1000", "--format", "packed",
                 "--out", str(f)]) == 0
    ascii_ = run(capsys, "word", "--preset", "silver", "--prefix", "1000")[1].strip()
    assert str(Word.from_packed(f.read_bytes())) == ascii_


@pytest.mark.parametrize("argv,code", [
    (["word", "--alpha-cf", "1,0,1", "--sn", "3"], 2),
    (["word", "--preset", "nosuch", "--sn", "3"], 2),
    (["word", "--alpha-value", "0.6180339887", "--cf-depth", "32", "--sn", "3"], 3),
    (["word", "--preset", "fibonacci", "--cf-depth", "64", "--sn", "80"], 4),
    (["word", "--preset", "fibonacci", "--sn", "3", "--prefix", "4"], 2),
    (["partition", "--preset", "fibonacci", "--word", "00"], 2),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code and "error" in err


def test_partition_and_transfer(capsys):
    code, out, _ = run(capsys, "partition", "--preset", "fibonacci", "--word", "0110", "--level", "1")
    doc = json.loads(out)
    assert code == 0 and doc["a"] == "" and doc["two_block"] == {"t": 3, "x": "01", "y": "10"}
    code, out, _ = run(capsys, "transfer", "--word", "10", "--lambda", "1", "--energy", "0")
    doc = json.loads(out)
    scale = 2.0 ** round(doc["logScale"] / 0.6931471805599453)
    assert doc["matrix"][2][0] * scale == -1.0 and abs(doc["detError"]) < 1e-15


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"preset": "fibonacci", "sn": 4}))
    assert run(capsys, "word", "--config", str(cfg))[1] == "10110\n"
    assert run(capsys, "word", "--config", str(cfg), "--sn", "3")[1] == "101\n"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "word", "--config", str(cfg))[0] == 2


def test_schema_and_version(capsys):
    code, out, _ = run(capsys, "--schema")
    assert code == 0 and json.loads(out)
    with pytest.raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


def test_spectrum_to_lyapunov_pipeline(tmp_path, capsys):
    bands_file = tmp_path / "bands_file.json"
    assert main(["spectrum", "--preset", "fibonacci", "--level", "8", "--out", str(bands_file)]) == 0
    bands = json.loads(bands_file.read_text())["bands"]
    code, out, _ = run(capsys, "lyapunov", "--preset", "fibonacci", "--band-midpoints", str(bands_file),
                       "--widest", "3", "--max-level", "12")
    lines = out.strip().splitlines()
    assert code == 0 and "header" in json.loads(lines[0])
    rows = [json.loads(l) for l in lines[1:]]
    assert {r["band_id"] for r in rows} <= set(range(len(bands)))
    code, out, _ = run(capsys, "growth", "--preset", "fibonacci", "--band-midpoints", str(bands_file),
                       "--widest", "2", "--max-len", "2000", "--samples", "2", "--format", "csv")
    assert code == 0 and out.startswith("# {") and "lognorm" in out.splitlines()[1]


def test_certify(capsys):
    code, out, _ = run(capsys, "certify", "--preset", "fibonacci", "--energy", "0.5",
                       "--word", "0110101101", "--max-len", "500")
    cert = json.loads(out)["certificates"][0]
    assert code == 0
    assert cert["log_norm"] <= cert["refined_log_bound"] <= cert["log_bound"]


def test_verify_all_subset(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = run(capsys, "verify-all", "--only", "1,2", "--skip-determinism", "--out", str(out))
    assert code == 0 and "PASS" in text
    assert [r["number"] for r in json.loads(out.read_text())["criteria"]] == [1, 2]
