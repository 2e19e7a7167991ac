import csv
import json
import math

import pytest

from finlap.cli import main, parse_grid, UsageError


@pytest.fixture(scope="module")
def cert_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "cert.json"
    assert main(["forge", "--out", str(path), "--pairs", "2"]) == 0
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_zero_pairs_is_usage_error(tmp_path):
    assert main(["forge", "--out", str(tmp_path / "c.json"), "--pairs", "0"]) == 2


def test_invalid_values_are_usage_errors(tmp_path):
    out = str(tmp_path / "c.json")
    assert main(["forge", "--out", out, "--sigma", "1.5"]) == 2
    assert main(["forge", "--out", out, "--omega", "-1"]) == 2
    assert main(["forge"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


def test_unwritable_path_is_io_error(tmp_path):
    assert main(["forge", "--pairs", "1", "--out", str(tmp_path / "missing" / "c.json")]) == 3


def test_missing_certificate_is_io_error(tmp_path):
    assert main(["eval", "--in", str(tmp_path / "nope.json"), "--grid", "0"]) == 3


def test_corrupt_certificate_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["verify", "--in", str(bad)]) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"pairs": 1, "omega": 0.2}))
    out = tmp_path / "c.json"
    assert main(["forge", "--config", str(cfg), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["omega"] == 0.2 and len(data["b"]) == 2
    cfg.write_text(json.dumps({"pairs": 1, "colour": "red"}))
    assert main(["forge", "--config", str(cfg), "--out", str(out)]) == 2


def test_eval_grid(cert_path, tmp_path):
    out = tmp_path / "vals.csv"
    assert main(["eval", "--in", str(cert_path), "--grid", "0,b", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["k", "sign_H", "log_abs_H", "log_tail_bound"]
    cert = json.loads(cert_path.read_text())
    eps = [math.exp(l) * s for s, l in cert["eps"]]
    g0 = math.fsum((-1) ** j * e for j, e in enumerate(eps, start=2))
    assert float(rows[1][2]) == pytest.approx(math.log(abs(g0)), rel=1e-12)
    signs = [int(r[1]) for r in rows[2:]]
    assert signs == [(-1) ** j for j in range(2, 2 + len(cert["b"]))]


def test_eval_empty_grid_is_header_only(cert_path, tmp_path):
    out = tmp_path / "empty.csv"
    assert main(["eval", "--in", str(cert_path), "--grid", "", "--out", str(out)]) == 0
    assert read_csv(out) == [["k", "sign_H", "log_abs_H", "log_tail_bound"]]


def test_zeros_then_verify(cert_path, tmp_path):
    zpath = tmp_path / "z.json"
    assert main(["zeros", "--in", str(cert_path), "--out", str(zpath)]) == 0
    data = json.loads(zpath.read_text())
    assert len(data["zeros"]) == 2 * 2 - 1
    report = tmp_path / "report.json"
    assert main(["verify", "--in", str(zpath), "--out", str(report), "--seed", "7"]) == 0
    rep = json.loads(report.read_text())
    assert rep["passed"] and rep["seed"] == 7


def test_verify_failure_exit_code(cert_path, tmp_path):
    data = json.loads(cert_path.read_text())
    data["b"][0] *= 1.1
    data["margins"][0]["k"] = data["b"][0]
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(data))
    assert main(["verify", "--in", str(bad)]) == 4


def test_export_plot(cert_path, tmp_path):
    outdir = tmp_path / "plots"
    assert main(["export-plot", "--in", str(cert_path), "--out", str(outdir),
                 "--samples", "37"]) == 0
    g = read_csv(outdir / "g_samples.csv")
    t = read_csv(outdir / "imag_axis.csv")
    assert len(g) == 38 and len(t) == 38
    assert g[0] == ["x", "g", "sign_g", "log_abs_g"]


def test_byte_identical_reruns(tmp_path):
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        assert main(["forge", "--pairs", "2", "--out", str(d / "cert.json")]) == 0
        assert main(["verify", "--in", str(d / "cert.json"), "--out", str(d / "report.json"),
                     "--seed", "11"]) == 0
        outputs.append([(d / f).read_bytes() for f in ("cert.json", "report.json")])
    assert outputs[0] == outputs[1]


def test_parse_grid():
    assert parse_grid("1, 2,lin:0:1:3") == [1.0, 2.0, 0.0, 0.5, 1.0]
    assert parse_grid("geom:1:100:3") == pytest.approx([1.0, 10.0, 100.0])
    assert parse_grid("b", [3.0, 4.0]) == [3.0, 4.0]
    for bad in ("x", "lin:1:2", "geom:0:1:3", "-1", "b"):
        with pytest.raises(UsageError):
            parse_grid(bad)
