import csv
import json
import math

import numpy as np
import pytest

from triwalk import __version__
from triwalk.cli import EXIT_INCONSISTENT, EXIT_INVALID, EXIT_OK, main
from triwalk.lattice import site_to_physical, SiteCoord


def read_csv(path):
    lines = path.read_text().splitlines()
    meta = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    return meta, rows


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--no-timestamp"])


def test_classify_outputs_json(tmp_path, capsys):
    assert run(tmp_path, "classify", "--coin", "crec") == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["verdict"] == "QuasiOneDimensionalRecurrent"
    assert printed["propagation_direction"] == "e2"
    doc = json.loads((tmp_path / "classify.json").read_text())
    assert doc["triwalk_version"] == __version__
    assert doc["config"]["coin"] == "crec"
    assert "generated" not in doc
    assert doc["result"]["zero_diagonal_count"] == 2


@pytest.mark.parametrize("coin, expected", [
    ("grover", "Transient"),
    ("perm:231", "TrivialGeneralizedPermutation"),
    ("identity", "TrivialGeneralizedPermutation"),
])
def test_classify_presets(tmp_path, capsys, coin, expected):
    assert run(tmp_path, "classify", "--coin", coin) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == expected


def test_evolve_p0_and_provenance(tmp_path):
    assert run(tmp_path, "evolve", "--coin", "grover", "--steps", "6") == EXIT_OK
    meta, rows = read_csv(tmp_path / "p0.csv")
    assert meta[0] == f"# triwalk {__version__}"
    cfg = json.loads(meta[1].removeprefix("# config: "))
    assert cfg["steps"] == 6 and cfg["command"] == "evolve"
    p = {int(r["t"]): float(r["p0"]) for r in rows}
    assert p[3] == pytest.approx(64 / 81, abs=1e-14)
    assert p[6] == pytest.approx(3136 / 6561, abs=1e-14)


def test_timestamp_present_by_default(tmp_path):
    assert main(["classify", "--coin", "grover", "--out", str(tmp_path)]) == EXIT_OK
    assert "generated" in json.loads((tmp_path / "classify.json").read_text())


def test_output_is_byte_deterministic(tmp_path):
    outputs = []
    for _ in range(2):
        assert run(tmp_path, "evolve", "--coin", "random:7", "--steps", "12",
                   "--snapshot", "12") == EXIT_OK
        outputs.append([(tmp_path / n).read_bytes() for n in ("p0.csv", "snapshot_t12.csv")])
    assert outputs[0] == outputs[1]


def snapshot(tmp_path, coin, init, t=60):
    assert run(tmp_path, "evolve", "--coin", coin, "--init", init,
               "--steps", str(t), "--snapshot", str(t)) == EXIT_OK
    _, rows = read_csv(tmp_path / f"snapshot_t{t}.csv")
    a = np.array([int(r["a"]) for r in rows])
    b = np.array([int(r["b"]) for r in rows])
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    p = np.array([float(r["p"]) for r in rows])
    return a, b, x, y, p


def test_snapshot_grover_symmetric_peaks_at_origin(tmp_path):
    a, b, x, y, p = snapshot(tmp_path, "grover", "symmetric")
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (a[p.argmax()], b[p.argmax()]) == (0, 0)
    dist = dict(zip(zip(a.tolist(), b.tolist()), p))
    for (sa, sb), v in dist.items():
        ra, rb = sb - sa, -sa  # 120 degree rotation
        assert dist.get((ra, rb), 0.0) == pytest.approx(v, abs=1e-12)
    for ai, bi, xi, yi in zip(a[:50], b[:50], x, y):
        assert (xi, yi) == pytest.approx(site_to_physical(SiteCoord(ai, bi)))


def test_snapshot_grover_fastdecay_is_a_ring(tmp_path):
    t = 60
    _, _, x, y, p = snapshot(tmp_path, "grover", "fastdecay", t)
    r = np.hypot(x, y)
    assert p[r < 0.1].sum() < 1e-4
    assert p[r < t / 6].sum() < 0.05
    assert r[p.argmax()] > t / 3


def test_snapshot_crec_is_confined(tmp_path):
    _, _, _, y, p = snapshot(tmp_path, "crec", "symmetric")
    assert p[np.abs(y) > 2].sum() == 0.0


def test_threshold_drops_small_cells(tmp_path):
    assert run(tmp_path, "evolve", "--steps", "9", "--snapshot", "9",
               "--threshold", "1e-3") == EXIT_OK
    _, rows = read_csv(tmp_path / "snapshot_t9.csv")
    assert rows and all(float(r["p"]) > 1e-3 for r in rows)


def test_json_format(tmp_path):
    assert run(tmp_path, "evolve", "--steps", "3", "--format", "json") == EXIT_OK
    doc = json.loads((tmp_path / "p0.json").read_text())
    assert [r["t"] for r in doc["result"]] == [0, 1, 2, 3]
    assert doc["result"][3]["p0"] == pytest.approx(64 / 81, abs=1e-14)


def test_config_file_and_coin_file(tmp_path, capsys):
    coin_file = tmp_path / "coin.json"
    coin_file.write_text(json.dumps({"coin": ["0", "0", "1", "1", "0", "0", "0", "1", "0"]}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"coin": "@" + str(coin_file), "steps": 9}))
    assert run(tmp_path, "evolve", "--config", str(cfg)) == EXIT_OK
    _, rows = read_csv(tmp_path / "p0.csv")
    assert len(rows) == 10
    assert [float(r["p0"]) for r in rows[3::3]] == pytest.approx([1.0] * 3)
    # command-line flags win over the file
    assert run(tmp_path, "evolve", "--config", str(cfg), "--steps", "4") == EXIT_OK
    assert len(read_csv(tmp_path / "p0.csv")[1]) == 5


def test_exponent_command(tmp_path, capsys):
    assert run(tmp_path, "exponent", "--coin", "crec", "--steps", "120",
               "--fit-window", "30,120") == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["exponent"] == pytest.approx(-1.0, abs=0.1)
    assert out["verdict"]["consistent"] is True
    assert out["norm_drift"] < 1e-9
    assert out["init"][0].startswith("0.577350")
    saved = json.loads((tmp_path / "exponent.json").read_text())["result"]
    assert saved == out


def test_exponent_trivial_coin(tmp_path, capsys):
    assert run(tmp_path, "exponent", "--coin", "perm:231", "--steps", "30",
               "--fit-window", "3,30") == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["exponent"] == pytest.approx(0.0, abs=1e-12)  # p0(3k) = 1
    assert out["polya_partial"] == 1.0


def test_exponent_inconsistent_exit(tmp_path):
    # a window this early sits in the pre-asymptotic regime
    assert run(tmp_path, "exponent", "--coin", "crec", "--steps", "30",
               "--fit-window", "3,30") == EXIT_INCONSISTENT


def test_spectrum_command(tmp_path):
    assert run(tmp_path, "spectrum", "--coin", "grover", "--grid", "32") == EXIT_OK
    _, rows = read_csv(tmp_path / "dispersion.csv")
    assert len(rows) == 32 * 32
    doc = json.loads((tmp_path / "stationary.json").read_text())["result"]
    assert all(v < 1e-8 for v in doc["identity_residuals"].values())
    assert doc["closed_form_consistency"] == 1.0
    assert isinstance(json.loads((tmp_path / "flagged.json").read_text())["result"], list)


def test_classical_command(tmp_path):
    assert run(tmp_path, "classical", "--steps", "30") == EXIT_OK
    _, rows = read_csv(tmp_path / "classical.csv")
    assert [int(r["t"]) for r in rows] == list(range(0, 31, 3))
    assert float(rows[1]["p0_exact_float"]) == pytest.approx(2 / 9)
    assert math.isnan(float(rows[0]["stirling"]))


@pytest.mark.parametrize("args", [
    ["evolve", "--coin", "1,2,3,4,5,6,7,8,9"],
    ["evolve", "--coin", "nonsense"],
    ["evolve", "--init", "1,0"],
    ["evolve", "--init", "0,0,0"],
    ["evolve", "--steps", "0"],
    ["evolve", "--steps", "5", "--snapshot", "9"],
    ["exponent", "--steps", "100"],
    ["spectrum", "--grid", "8"],
    ["classical", "--steps", "2"],
    ["classify", "--coin", "@/nonexistent.json"],
    ["classify", "--config", "/nonexistent.json"],
])
def test_invalid_input_exit(tmp_path, capsys, args):
    assert run(tmp_path, *args) == EXIT_INVALID
    assert "triwalk: error:" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(tmp_path, "classify", "--config", str(cfg)) == EXIT_INVALID


def test_bad_fit_window_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "exponent", "--fit-window", "50,10")
    assert exc.value.code == 2
