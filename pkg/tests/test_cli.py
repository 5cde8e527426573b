import json
import subprocess
import sys

import pytest

from tomolab.cli import build_parser, main


def test_parser_lists_every_subcommand():
    text = build_parser().format_help()
    for name in ["risk", "scaling", "bounds", "packing", "shadows", "discriminate", "tables",
                 "selftest", "moments", "chi2", "tomography"]:
        assert name in text


def test_seed_must_fit_u64():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["tables", "--seed", str(2**64)])
    assert build_parser().parse_args(["tables", "--seed", "0x10"]).seed == 16


def test_tables_end_to_end(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["tables", "--seed", "1", "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["metadata"]["code_version"]
    header = (out / "tables.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "claim_id" and header[-2:] == ["verdict", "anchor"]
    assert "wrote" in capsys.readouterr().out


def test_bad_config_exits_with_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("mystery: 3\n")
    assert main(["tables", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("d_list: [2]\nn: 100\n")
    proc = subprocess.run(
        [sys.executable, "-m", "tomolab.cli", "tomography", "--config", str(cfg), "--seed", "3", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "estimate.json").exists()
