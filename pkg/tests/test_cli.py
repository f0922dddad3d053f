import csv
import subprocess
import sys

import pytest
import yaml

from deepapprox.cli import CSV_COLUMNS, GAP_COLUMNS, main
from deepapprox.network import count, deserialize
from deepapprox.univariate import square_counts


def write_cfg(path, **cfg):
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_build_square(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps="2^-6", name="sq")
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "sq.report.csv")
    assert list(row) == list(CSV_COLUMNS)
    assert float(row["measured"]) <= float(row["bound"]) <= 2.0**-6
    net = deserialize((tmp_path / "sq.net.json").read_text())
    assert count(net).total == int(row["total"])


def test_build_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps=0.01, name="sq")
    outs = []
    for k in range(2):
        d = tmp_path / f"o{k}"
        assert main(["build", "--config", cfg, "--out", str(d), "--seed", "5"]) == 0
        outs.append(((d / "sq.net.json").read_bytes(), (d / "sq.report.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_build_rejects_eps(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps=2)
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) != 0
    assert "eps out of range" in capsys.readouterr().err


def test_build_validates_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "ridge", "function": "exp"}, eps=0.1)
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "direction" in capsys.readouterr().err
    cfg = write_cfg(tmp_path / "d.yaml", target={"kind": "warp"}, eps=0.1)
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize(
    "target",
    [
        {"kind": "polynomial", "coeffs": [0.1, 0.5, 0.5]},
        {"kind": "smooth", "function": "exp"},
        {"kind": "sum", "targets": ["identity", "square"], "beta": [0.5, 0.5]},
        {"kind": "compose", "stages": ["square", "square"]},
        {"kind": "ridge", "direction": [0.5, 0.5], "function": "exp"},
        {"kind": "gaussian", "d": 2},
        {"kind": "linear_product", "rows": [[1, 0], [0.5, 0.5]]},
        {"kind": "multinomial", "terms": [{"alpha": [1, 1], "coeff": 0.5}, {"alpha": [2, 0], "coeff": 0.5}]},
        {"kind": "poly_chain", "terms": [{"alpha": [1, 1], "coeff": 1.0}], "chain": ["exp"]},
    ],
)
def test_build_every_kind(tmp_path, target):
    cfg = write_cfg(tmp_path / "c.yaml", target=target, eps="2^-5", name="n", grid=4000)
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_csv(tmp_path / "n.report.csv")
    assert float(row["measured"]) <= 2.0**-5


def test_seed_priority(tmp_path, monkeypatch):
    target = {"kind": "ridge", "direction": [0.5, 0.5], "function": "exp"}
    cfg = write_cfg(tmp_path / "c.yaml", target=target, eps=0.1, name="r", grid=50)
    monkeypatch.setenv("DEEPAPPROX_SEED", "17")
    assert main(["build", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "r.report.csv")[0]["seed"] == "17"
    assert main(["build", "--config", cfg, "--out", str(tmp_path), "--seed", "3"]) == 0
    assert read_csv(tmp_path / "r.report.csv")[0]["seed"] == "3"


def test_eval_three_points(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps=0.25, name="sq")
    main(["build", "--config", cfg, "--out", str(tmp_path)])
    net = str(tmp_path / "sq.net.json")
    runs = []
    for _ in range(2):
        assert main(["eval", net, "--grid", "3", "--out", str(tmp_path), "--target", "square"]) == 0
        runs.append((tmp_path / "sq.eval.csv").read_bytes())
    assert runs[0] == runs[1]
    rows = read_csv(tmp_path / "sq.eval.csv")
    assert [float(r["x0"]) for r in rows] == [0.0, 0.5, 1.0]
    assert [float(r["value"]) for r in rows] == [0.0, 0.25, 1.0]
    assert "sup_error=" in capsys.readouterr().out


def test_eval_corrupt_file(tmp_path, capsys):
    bad = tmp_path / "bad.net.json"
    bad.write_text('{"version": 1, "input_dim": 1, "layers": [[{"act": "relu"')
    assert main(["eval", str(bad), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["eval", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_sweep_square(tmp_path):
    eps = [f"2^-{k}" for k in range(4, 11)]
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps=eps, name="sq")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sq.sweep.csv")
    assert len(rows) == 7
    for k, row in zip(range(4, 11), rows):
        n = k + 1
        want = square_counts(n)
        assert int(row["total"]) == want["relu"] + want["step"]
    svg = (tmp_path / "sq.sweep.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 2


def test_sweep_empty_list(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps=[])
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_gap_small_and_vacuous(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", target="square", eps=[0.5, "2^-4", "2^-6"], resolution=14)
    assert main(["gap", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "square.gap.csv")
    assert list(rows[0]) == list(GAP_COLUMNS)
    assert rows[0]["vacuous"] == "pass"  # booleans print as pass/fail
    assert rows[-1]["vacuous"] == "fail"
    assert all(r[f"verdict_{k}"] == "pass" for r in rows for k in "abcd")
    assert (tmp_path / "square.gap.svg").read_text().count("<polyline") == 2


def test_breakpoints(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.yaml", target={"kind": "square"}, eps="2^-4", name="sq")
    main(["build", "--config", cfg, "--out", str(tmp_path)])
    assert main(["breakpoints", str(tmp_path / "sq.net.json"), "--resolution", "16", "--out", str(tmp_path)]) == 0
    assert "breakpoints=31" in capsys.readouterr().out
    rows = read_csv(tmp_path / "sq.breakpoints.csv")
    assert [float(r["location"]) for r in rows] == [k / 32 for k in range(1, 32)]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "deepapprox", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("build", "eval", "sweep", "gap", "breakpoints"):
        assert cmd in proc.stdout
