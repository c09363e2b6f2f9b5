"""Command-line front end: exit codes, file outputs, manifests."""

import json
import math

import pytest

from otfslink.cli import GAIN_CSV_HEADER, main
from otfslink.config import config_dict_to_ini
from otfslink.montecarlo import SWEEP_CSV_HEADER

TINY = """
[grid]
m = 2
n = 2

[channel]
paths = 1
l_max = 1
k_max = 1

[sim]
detector = map_exact
snr_db = 0, 10
data_len = 4
max_trials = 200
max_frame_errors = 50
master_seed = 1
"""


def write_tiny(tmp_path, text=TINY):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return path


def mask_wall(csv_text):
    # wall_seconds is the one permitted difference between repeat runs
    lines = csv_text.strip().split("\n")
    return [lines[0]] + [ln.rsplit(",", 1)[0] for ln in lines[1:]]


class TestSimCommand:
    def test_tiny_config_writes_schema_exact_csv(self, tmp_path):
        cfg = write_tiny(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sim", str(cfg), str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == SWEEP_CSV_HEADER
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "0"
        assert int(first[1]) <= 200

    def test_repeat_runs_identical_modulo_wall(self, tmp_path):
        cfg = write_tiny(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sim", str(cfg), str(a)]) == 0
        assert main(["sim", str(cfg), str(b)]) == 0
        assert mask_wall(a.read_text()) == mask_wall(b.read_text())

    def test_manifest_written_next_to_csv(self, tmp_path):
        cfg = write_tiny(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sim", str(cfg), str(out)]) == 0
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        assert manifest["tool"] == "otfslink"
        assert manifest["master_seed"] == 1
        assert manifest["config"]["sim"]["detector"] == "map_exact"
        assert manifest["outputs"]["csv"] == str(out)

    def test_manifest_config_reruns_identically(self, tmp_path):
        cfg = write_tiny(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sim", str(cfg), str(out)]) == 0
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        replay = tmp_path / "replay.ini"
        replay.write_text(config_dict_to_ini(manifest["config"]), encoding="utf-8")
        out2 = tmp_path / "replay.csv"
        assert main(["sim", str(replay), str(out2)]) == 0
        assert mask_wall(out.read_text()) == mask_wall(out2.read_text())

    def test_seed_override_lands_in_manifest(self, tmp_path):
        cfg = write_tiny(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sim", str(cfg), str(out), "--seed", "5"]) == 0
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        assert manifest["master_seed"] == 5
        assert manifest["config"]["sim"]["master_seed"] == 5

    def test_missing_config_file_exits_2_with_path(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        rc = main(["sim", str(tmp_path / "nope.ini"), str(out)])
        assert rc == 2
        assert "nope.ini" in capsys.readouterr().err

    def test_invalid_config_exits_2_naming_key(self, tmp_path, capsys):
        cfg = write_tiny(tmp_path, TINY.replace("paths = 1", "paths = 1\nspeed = 3"))
        rc = main(["sim", str(cfg), str(tmp_path / "o.csv")])
        assert rc == 2
        assert "speed" in capsys.readouterr().err

    def test_infeasible_detector_exits_3(self, tmp_path, capsys):
        big = TINY.replace("m = 2", "m = 8").replace("n = 2", "n = 8")
        big = big.replace("data_len = 4", "data_len = 64")
        cfg = write_tiny(tmp_path, big)
        rc = main(["sim", str(cfg), str(tmp_path / "o.csv")])
        assert rc == 3
        assert "lmmse" in capsys.readouterr().err

    def test_bad_worker_count_exits_2(self, tmp_path):
        cfg = write_tiny(tmp_path)
        assert main(["sim", str(cfg), str(tmp_path / "o.csv"), "--workers", "0"]) == 2

    def test_ofdm_subcommand_records_waveform(self, tmp_path):
        cfg = write_tiny(tmp_path)
        out = tmp_path / "ofdm.csv"
        assert main(["ofdm", str(cfg), str(out)]) == 0
        manifest = json.loads((tmp_path / "ofdm.csv.manifest.json").read_text())
        assert manifest["config"]["sim"]["waveform"] == "ofdm"


class TestGainCommand:
    def test_table_layout_and_bound_column(self, tmp_path):
        out = tmp_path / "gain.csv"
        rc = main(
            [
                "gain",
                "--m", "2", "--n", "3",
                "--l-max", "1", "--k-max", "1",
                "--p", "2", "--d-e2", "4,8",
                "--budget", "5000", "--seed", "0",
                "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == GAIN_CSV_HEADER
        assert len(lines) == 3
        for line, d2 in zip(lines[1:], (4, 8)):
            cells = line.split(",")
            assert cells[0] == str(d2)
            bound = 10.0 * math.log10(d2 / 2)
            assert float(cells[5]) == pytest.approx(bound, abs=1e-4)

    def test_path_sweep_bound_strictly_decreases(self, capsys):
        rc = main(
            [
                "gain",
                "--m", "2", "--n", "3",
                "--l-max", "1", "--k-max", "1",
                "--p", "1,2,3", "--d-e2", "4",
                "--budget", "2000",
            ]
        )
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")
        bounds = [float(ln.split(",")[5]) for ln in lines[1:]]
        assert bounds == sorted(bounds, reverse=True)
        assert len(set(bounds)) == len(bounds)

    def test_empty_distance_list_exits_2(self, capsys):
        rc = main(
            ["gain", "--m", "2", "--n", "3", "--l-max", "1", "--k-max", "1", "--d-e2", ""]
        )
        assert rc == 2

    def test_seed_changes_sampled_rows_only(self, capsys):
        # d_e2=8 so per-case gains differ (weight-1 grams are all 4I)
        argv = [
            "gain",
            "--m", "2", "--n", "3",
            "--l-max", "1", "--k-max", "1",
            "--p", "2", "--d-e2", "8",
            "--budget", "40",
        ]
        assert main(argv + ["--seed", "1"]) == 0
        first = capsys.readouterr().out
        assert main(argv + ["--seed", "1"]) == 0
        again = capsys.readouterr().out
        assert main(argv + ["--seed", "2"]) == 0
        other = capsys.readouterr().out
        assert first == again
        assert first != other


class TestVerifyCommand:
    def test_small_run_exits_0_and_reports(self, capsys):
        rc = main(["verify", "--cases", "150", "--seed", "3", "--max-m", "6", "--max-n", "6"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "exact-bound failures: 0" in out
        assert "equality gap" in out
        assert "violated in" in out

    def test_zero_cases_exits_2(self, capsys):
        assert main(["verify", "--cases", "0"]) == 2


class TestMindistCommand:
    def test_table_values(self, capsys):
        assert main(["mindist", "A"]) == 0
        out = capsys.readouterr().out
        assert "min_squared_euclidean_distance: 12" in out
        assert "d_free: 3" in out
        assert main(["mindist", "D"]) == 0
        out = capsys.readouterr().out
        assert "min_squared_euclidean_distance: 40" in out
        assert "frame_limited: false" in out

    def test_short_frame_sets_flag(self, capsys):
        assert main(["mindist", "C", "--frame-bits", "1"]) == 0
        out = capsys.readouterr().out
        assert "frame_limited: true" in out

    def test_unknown_code_exits_2(self, capsys):
        assert main(["mindist", "Z"]) == 2


class TestChannelSampleCommand:
    def test_csv_rows_and_determinism(self, capsys):
        argv = ["channel-sample", "--p", "2", "--l-max", "3", "--k-max", "5",
                "--count", "2", "--seed", "4"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        lines = first.strip().split("\n")
        assert lines[0] == "realization,path,delay,doppler,gain_real,gain_imag"
        assert len(lines) == 5
        assert main(argv) == 0
        assert capsys.readouterr().out == first

    def test_speed_derived_doppler_span(self, capsys):
        argv = [
            "channel-sample", "--p", "4", "--l-max", "0",
            "--speed-kmh", "500", "--carrier-hz", "4e9",
            "--n", "128", "--delta-f-hz", "15000",
            "--count", "30", "--seed", "0",
        ]
        assert main(argv) == 0
        rows = capsys.readouterr().out.strip().split("\n")[1:]
        dopplers = [int(r.split(",")[3]) for r in rows]
        assert max(abs(k) for k in dopplers) <= 16
        assert max(abs(k) for k in dopplers) > 8

    def test_underivable_k_max_exits_2(self, capsys):
        rc = main(["channel-sample", "--p", "1", "--l-max", "1", "--speed-kmh", "100"])
        assert rc == 2
        assert "k-max" in capsys.readouterr().err
