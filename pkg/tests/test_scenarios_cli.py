import json
import math
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from wpt_dq.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, run
from wpt_dq.errors import ConfigError
from wpt_dq.params import Waveform
from wpt_dq.scenarios import load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "l_t": 140.90e-6, "c_t": 16.45e-9, "r_t": 0.2, "l_r": 55.20e-6, "c_r": 41.47e-9,
    "r_r": 0.084, "r_l": 100.0, "m": 15e-6, "u_dc": 20.0, "f_hz": 105e3,
}


def write(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if isinstance(data, dict) else data)
    return path


def cli(*args):
    return run([str(a) for a in args])


def test_reference_config_loads():
    s = load_config(CONFIGS / "reference.yaml")
    assert s.params.M == 15e-6
    assert s.sweep.m_values_h == (9e-6, 15e-6)
    assert len(s.sweep.frequencies()) == 81
    assert s.identify.waveforms == (Waveform.SINUSOIDAL, Waveform.PHASE_SHIFT_SQUARE)
    assert len(s.identify.couplings(s.params)) == 6


def test_numeric_strings_and_degrees():
    s = parse_config({**BASE, "m": "9e-6", "sigma_deg": 60})
    assert s.params.M == 9e-6
    assert s.drive.sigma == pytest.approx(math.pi / 3)


@pytest.mark.parametrize(
    "patch, fragment",
    [
        ({"m": None}, "'m'"),
        ({"r_l": -5.0}, "R_L"),
        ({"bogus": 1}, "bogus"),
        ({"waveform": "triangle"}, "waveform"),
        ({"step": {"t_step_cycles": 10}}, "t_step_cycles"),
        ({"identify": {"k_values": [0.1, 0.7]}}, "coupling"),
        ({"identify": {"samples_per_cycle": 25}}, "samples_per_cycle"),
        ({"sweep": {"points": "many"}}, "sweep.points"),
    ],
)
def test_config_errors_name_the_key(patch, fragment):
    data = {**BASE, **patch}
    data = {k: v for k, v in data.items() if v is not None}
    with pytest.raises(ConfigError, match=fragment):
        parse_config(data)


def test_missing_coupling_has_no_default():
    data = dict(BASE)
    del data["m"]
    with pytest.raises(ConfigError, match="missing"):
        parse_config(data)


def test_yaml_error_reports_position(tmp_path):
    path = write(tmp_path, "l_t: 1\nc_t: [1, 2\n")
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        load_config(path)


def test_config_error_exit_code(tmp_path, capsys):
    path = write(tmp_path, {**BASE, "r_t": "abc"})
    assert cli("sweep", "--config", path, "--out", tmp_path / "o") == EXIT_CONFIG
    assert "r_t" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert cli("phase", "--config", tmp_path / "nope.yaml", "--out", tmp_path / "o") == EXIT_CONFIG


def test_single_point_sweep(tmp_path):
    path = write(tmp_path, {**BASE, "sweep": {"f_start_hz": 105e3, "f_stop_hz": 105e3, "points": 1}})
    out = tmp_path / "o"
    assert cli("sweep", "--config", path, "--out", out) == EXIT_OK
    lines = (out / "sweep_m15uH.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[2].startswith("max")
    manifest = json.loads((out / "manifest_sweep.json").read_text())
    assert manifest["passed"] and manifest["tolerances"]["sweep_dq_vs_phasor_rel"] == 1e-9
    assert manifest["config"]["m"] == 15e-6


def test_reference_sweep(tmp_path):
    out = tmp_path / "o"
    assert cli("sweep", "--config", CONFIGS / "reference.yaml", "--out", out, "--check") == EXIT_OK
    for tag in ("m9uH", "m15uH"):
        assert len((out / f"sweep_{tag}.csv").read_text().splitlines()) == 83


def test_empty_identify_grid(tmp_path):
    path = write(tmp_path, {**BASE, "identify": {"k_values": []}})
    out = tmp_path / "o"
    assert cli("identify", "--config", path, "--out", out, "--check") == EXIT_OK
    assert (out / "identify.csv").read_text().splitlines() == [
        "m_true_h,m_hat_h,rel_err,k_true,r_l_ohm,waveform,f_hz"
    ]


def small_identify(tmp_path, **extra):
    ident = {"k_values": [0.12, 0.18], "r_l_values_ohm": [100.0], "waveforms": ["sinusoidal"], **extra}
    return write(tmp_path, {**BASE, "identify": ident})


def test_identify_is_deterministic(tmp_path):
    path = small_identify(tmp_path, noise_rel=1e-3)
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    assert cli("identify", "--config", path, "--out", outs[0], "--seed", 7) == EXIT_OK
    assert cli("identify", "--config", path, "--out", outs[1], "--seed", 7) == EXIT_OK
    assert cli("identify", "--config", path, "--out", outs[2], "--seed", 8) == EXIT_OK
    a, b, c = ((o / "identify.csv").read_bytes() for o in outs)
    assert a == b and a != c


def test_check_flags_mismatched_receiver(tmp_path):
    path = small_identify(tmp_path, known_overrides={"l_r": 60.72e-6})
    out = tmp_path / "o"
    assert cli("identify", "--config", path, "--out", out) == EXIT_OK
    assert cli("identify", "--config", path, "--out", out, "--check") == EXIT_CHECK
    manifest = json.loads((out / "manifest_identify.json").read_text())
    assert manifest["passed"] is False


def test_phase_table(tmp_path, capsys):
    path = write(tmp_path, {**BASE, "phase": {"f_list_hz": [105e3], "oracle_cycles": 300}})
    assert cli("phase", "--config", path, "--out", tmp_path / "o", "--check") == EXIT_OK
    assert "calculated (deg)" in capsys.readouterr().out


def test_step_outputs(tmp_path):
    path = write(tmp_path, {**BASE, "step": {"t_step_cycles": 120, "t_end_cycles": 200}})
    out = tmp_path / "o"
    assert cli("step", "--config", path, "--out", out, "--check") == EXIT_OK
    head = (out / "step.csv").read_text().splitlines()
    assert head[0] == "t_s,i_t,i_t_cycle_peak,mag_i_dqt"
    assert len(head) == 1 + 200 * 24 + 1
    env = (out / "step_envelope.csv").read_text().splitlines()
    assert len(env) == 1 + 200


def test_entry_point_runs(tmp_path):
    path = write(tmp_path, {**BASE, "sweep": {"points": 3}})
    proc = subprocess.run(
        [sys.executable, "-m", "wpt_dq.cli", "sweep", "--config", str(path), "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "sweep: PASS" in proc.stdout
