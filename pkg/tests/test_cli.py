import csv
import hashlib
import json

import pytest

from tightineq.cli import EXIT_NONCLASSICAL, EXIT_OK, EXIT_USAGE, SEED_ENV, main


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    manifest = json.loads((tmp_path / f"{name}.manifest.json").read_text())
    return code, out, manifest


def test_fock_click_detected(tmp_path):
    code, out, man = run(tmp_path, "photocount-test", "--state", "fock:1", "--eta", "0.7",
                         "--detector", "click:2")
    rows = read_rows(out)
    assert code == EXIT_NONCLASSICAL and len(rows) == 1
    assert float(rows[0]["margin"]) > 0
    assert list(rows[0]) == ["alpha0", "margin", "std_error", "t1", "tau", "detector"]
    assert man["nonclassical"] is True


@pytest.mark.parametrize("det", ["pnr:3", "click:5"])
def test_coherent_is_classical(tmp_path, det):
    code, out, _ = run(tmp_path, "photocount-test", "--state", "coherent:1.0", "--detector", det)
    assert code == EXIT_OK
    assert float(read_rows(out)[0]["margin"]) <= 1e-9


def test_manifest_contents(tmp_path):
    code, out, man = run(tmp_path, "photocount-test", "--state", "coherent:0.5", "--detector", "pnr:2",
                         "--seed", "5")
    assert man["manifest_version"] == 1 and man["command"] == "photocount-test"
    assert man["seed"] == 5 and man["config"]["detector"] == "pnr:2"
    assert man["argv"][0] == "photocount-test"
    (entry,) = man["outputs"]
    assert entry["schema"] == "photocount-test/1"
    assert entry["sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()
    for key in ("tool_version", "timestamp"):
        assert key in man


def test_sampled_scan_reproducible(tmp_path):
    argv = ["photocount-test", "--scan", "alpha0=0:1:5", "--state", "sq-coh", "--r", "0.57",
            "--eta", "0.7", "--detector", "click:3", "--samples", "100000", "--seed", "7"]
    _, a, man_a = run(tmp_path, *argv, name="a.csv")
    _, b, man_b = run(tmp_path, *argv, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert man_a["outputs"][0]["sha256"] == man_b["outputs"][0]["sha256"]
    rows = read_rows(a)
    assert len(rows) == 5 and all(float(r["std_error"]) > 0 for r in rows)


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "99")
    _, _, man = run(tmp_path, "photocount-test", "--state", "fock:2", "--detector", "pnr:3",
                    "--samples", "1000")
    assert man["seed"] == 99


def test_phase_squeezed_alpha_scan(tmp_path):
    code, out, _ = run(tmp_path, "photocount-test", "--scan", "alpha0=0:3:61", "--state", "sq-coh",
                       "--r", "0.57", "--eta", "0.7", "--detector", "pnr:5", "--samples", "100000",
                       "--seed", "7")
    rows = read_rows(out)
    assert code == EXIT_NONCLASSICAL and len(rows) == 61
    assert list(rows[0]) == ["alpha0", "margin", "std_error", "t1", "t2", "tau", "detector"]
    assert any(float(r["margin"]) - 2 * float(r["std_error"]) > 0 for r in rows)


def test_uhd_vacuum_saturates(tmp_path):
    code, out, _ = run(tmp_path, "uhd-test", "--state", "vacuum")
    (row,) = read_rows(out)
    assert code == EXIT_OK and row["verdict"] == "classical"
    assert row["violated_inequality"].startswith("saturated:")
    assert list(row) == ["eta", "P1", "P2", "verdict", "violated_inequality", "t_star"]


def test_uhd_squeezed_vacuum(tmp_path):
    code, out, _ = run(tmp_path, "uhd-test", "--state", "sq-vac", "--r", "0.34")
    (row,) = read_rows(out)
    assert code == EXIT_NONCLASSICAL and row["verdict"] == "nonclassical"


def test_uhd_eta_scan_reports_crossover(tmp_path):
    bcsv = tmp_path / "boundary.csv"
    code, out, man = run(tmp_path, "uhd-test", "--state", "sq-vac", "--r", "0.34",
                         "--scan", "eta=0.1:1.0:10", "--boundary-csv", str(bcsv))
    verdicts = [r["verdict"] for r in read_rows(out)]
    assert code == EXIT_NONCLASSICAL and len(verdicts) == 10
    flips = sum(a != b for a, b in zip(verdicts, verdicts[1:]))
    assert flips == 1 and verdicts[0] == "classical"
    assert 0.1 < man["crossover_eta"] < 1.0
    assert {o["schema"] for o in man["outputs"]} == {"uhd-test/1", "uhd-boundary/1"}
    assert len(read_rows(bcsv)) == 801


def test_oracle_check(tmp_path):
    code, out, man = run(tmp_path, "oracle-check", "--N", "2", "--trials", "200", name="o.json")
    report = json.loads(out.read_text())
    assert code == EXIT_OK
    assert all(r["disagreements"] == 0 for r in report["reports"])
    assert man["outputs"][0]["sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()


@pytest.mark.parametrize("argv", [
    [],
    ["photocount-test", "--state", "fock:1"],
    ["photocount-test", "--state", "fock:1", "--detector", "pnr:4"],
    ["photocount-test", "--state", "fock:1", "--detector", "laser:2"],
    ["photocount-test", "--state", "fock:x", "--detector", "pnr:2"],
    ["photocount-test", "--state", "sq-coh", "--detector", "pnr:3"],
    ["photocount-test", "--state", "fock:1", "--detector", "pnr:3", "--scan", "alpha0=0:1:3"],
    ["photocount-test", "--state", "coherent:1", "--detector", "pnr:3", "--scan", "beta=0:1:3"],
    ["photocount-test", "--state", "coherent:1", "--detector", "pnr:5", "--m", "1"],
    ["uhd-test", "--state", "sq-vac"],
    ["uhd-test", "--state", "vacuum", "--gamma1", "0.5", "--gamma2", "0.5"],
    ["uhd-test", "--state", "vacuum", "--xi", "0"],
    ["oracle-check", "--N", "4"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
