import csv
import json
import math

import pytest
from hypothesis import given, strategies as st

from decoyrate.cli import CSV_HEADER, fmt, main, max_distances
from decoyrate.config import ConfigError, DeviceConfig


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, **values):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(values))
    return str(path)


configs = st.builds(
    DeviceConfig,
    mu=st.floats(0.0, 2.0),
    nu=st.floats(0.0, 0.5),
    eta_d=st.floats(0.0, 1.0),
    dark_count=st.floats(0.0, 1e-3),
    length_km=st.floats(0.0, 300.0),
    e_mis=st.floats(0.0, 0.5),
    f_ec=st.floats(1.0, 2.0),
    mode=st.sampled_from(["oracle", "decoy"]),
    seed=st.integers(0, 2**63),
)


@given(configs)
def test_config_round_trip(cfg):
    again = DeviceConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError) as err:
        DeviceConfig.from_dict({"mu": 0.5, "dark_cout": 1e-6})
    assert err.value.field == "dark_cout"


@pytest.mark.parametrize(
    "data, field",
    [({"e_mis": 0.7}, "e_mis"), ({"eta_d": 2}, "eta_d"), ({"f_ec": 0.5}, "f_ec"),
     ({"mode": "guess"}, "mode"), ({"mu": "half"}, "mu"), ({"d0": 1e-6}, "d0")],
)
def test_config_field_errors(data, field):
    with pytest.raises(ConfigError) as err:
        DeviceConfig.from_dict(data)
    assert err.value.field == field


def test_explicit_detector_darks():
    cfg = DeviceConfig.from_dict({"d0": 1e-6, "d1": 2e-6})
    det = cfg.detector()
    assert (det.d0, det.d1) == (1e-6, 2e-6)


def test_fmt_fixed_twelve_digits():
    assert fmt(0.00255551449186123) == "0.00255551449186"
    assert fmt(180.0) == "180.000000000"
    assert fmt(-1.87034302327e-7) == "-0.000000187034302327"
    assert "e" not in fmt(1.234e-9)


def test_rate_command_shows_vacuum_identity(capsys):
    code, out, err = run(capsys, "rate", "--length-km", "0", "--mu", "0.5")
    assert code == 0
    assert "notice" in err
    rows = {line.split()[0]: line.split() for line in out.splitlines() if not line.startswith("#")}
    G = {v: float(rows[v][1]) for v in ("koashi", "gllp", "ideal", "nodecoy")}
    Q0 = float(rows["koashi"][8])
    assert G["koashi"] - G["gllp"] == pytest.approx(Q0, rel=1e-6)


def test_rate_command_vacuum_source(capsys):
    code, out, _ = run(capsys, "rate", "--mu", "0")
    rows = {line.split()[0]: line.split() for line in out.splitlines() if not line.startswith("#")}
    assert code == 0
    for v in ("koashi", "gllp", "nodecoy"):
        assert float(rows[v][1]) <= 0
    assert float(rows["ideal"][1]) > 0


def test_rate_command_at_20km(capsys):
    code, out, _ = run(capsys, "rate", "--length-km", "20", "--mu", "0.48")
    rows = {line.split()[0]: line.split() for line in out.splitlines() if not line.startswith("#")}
    # regression value from the first evaluation of the analytic model
    assert float(rows["koashi"][1]) == pytest.approx(9.6300584562e-04, rel=1e-9)


def test_sweep_csv_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "sweep", "--l-max", "40", "--step", "10", "--out", str(a))[0] == 0
    assert run(capsys, "sweep", "--l-max", "40", "--step", "10", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(a.open()))
    assert rows[0] == CSV_HEADER
    assert [float(r[0]) for r in rows[1:]] == [0, 10, 20, 30, 40]
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["config"] == DeviceConfig().to_dict()
    assert meta["optimizer"]["grid_points"] == 32


def test_sweep_single_row(tmp_path, capsys):
    out = tmp_path / "one.csv"
    assert run(capsys, "sweep", "--l-min", "5", "--l-max", "5", "--out", str(out))[0] == 0
    assert len(out.read_text().splitlines()) == 2


def test_sweep_bad_range(capsys):
    assert run(capsys, "sweep", "--l-min", "10", "--l-max", "5")[0] == 1


def test_sweep_unwritable_path(capsys):
    code, _, err = run(capsys, "sweep", "--l-max", "0", "--out", "/nonexistent/dir/x.csv")
    assert code == 2 and "/nonexistent/dir/x.csv" in err


def test_missing_config_is_io_error(capsys):
    assert run(capsys, "rate", "--config", "/nonexistent.json")[0] == 2


def test_invalid_config_is_validation_error(tmp_path, capsys):
    code, _, err = run(capsys, "rate", "--config", write_config(tmp_path, e_mis=0.9))
    assert code == 1 and "e_mis" in err


def test_simulate_is_byte_stable_and_passes(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "simulate", "--length-km", "20", "--pulses", "2000000", "--seed", "5", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["seed"] == 5 and report["rng"].startswith("numpy.random.PCG64")
    assert report["deviation"]["passed"]


def test_simulate_flags_mismatched_target(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--length-km", "20", "--pulses", "1000000",
                     "--target-e-mis", "0.33", "--out", str(tmp_path / "s.json"))
    assert code == 3
    report = json.loads((tmp_path / "s.json").read_text())
    assert "E" in report["deviation"]["failed"]


def test_simulate_pulse_cap(tmp_path, capsys):
    cfg = write_config(tmp_path, max_pulses=1000)
    assert run(capsys, "simulate", "--config", cfg, "--pulses", "1001")[0] == 1


def test_decoy_check_analytic(capsys, tmp_path):
    code, out, _ = run(capsys, "decoy-check", "--analytic", "--length-km", "40", "--out", str(tmp_path / "d.json"))
    assert code == 0 and "result=PASS" in out
    assert json.loads((tmp_path / "d.json").read_text())["passed"]


def test_decoy_check_simulated(capsys):
    code, out, _ = run(capsys, "decoy-check", "--length-km", "0", "--pulses", "2000000", "--seed", "1")
    assert "Monte Carlo" in out and code in (0, 3)


@pytest.mark.parametrize("intensities", ["0.5,0.5,0", "0.5,0.05", "0.5,0.05,0.01", "a,b,c"])
def test_decoy_check_rejects_bad_intensities(capsys, intensities):
    assert run(capsys, "decoy-check", "--analytic", "--intensities", intensities)[0] == 1


def test_maxdist_ordering_and_stability(capsys):
    code, out1, _ = run(capsys, "maxdist")
    _, out2, _ = run(capsys, "maxdist")
    assert code == 0 and out1 == out2
    dist = {l.split()[0]: float(l.split()[1]) for l in out1.splitlines()[1:5]}
    assert dist["ideal"] >= dist["koashi"] > dist["gllp"] > dist["nodecoy"]
    assert "koashi - gllp gap" in out1


def test_maxdist_noiseless_is_unbounded():
    dist = max_distances(DeviceConfig(dark_count=0.0, e_mis=0.0, f_ec=1.0))
    assert math.isinf(dist["ideal"])
    assert math.isinf(dist["koashi"]) and math.isinf(dist["gllp"])


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "decoyrate", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "decoyrate" in res.stdout
