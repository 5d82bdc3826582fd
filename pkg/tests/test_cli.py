"""Command-line verbs, exercised through main(argv)."""

import json
import socket
import subprocess
import sys

import pytest

from meowsim.cli import _parse_counts, main


def scenario_doc(segments, cycle_ns, n=30, seed=3, measurement=(0, 7), **timing):
    return {
        "topology": {
            "segments": [{"device_count": d} for d in segments],
            "timing": {"pdo_cycle_ns": cycle_ns, **timing},
        },
        "workload": {"num_requests": n, "arrival": "uniform-phase", "seed": seed},
        "measurement": {"segment": measurement[0], "device": measurement[1]},
    }


@pytest.fixture
def exp1_file(tmp_path):
    path = tmp_path / "exp1_small.json"
    path.write_text(json.dumps(scenario_doc([8], 32_000)), encoding="utf-8")
    return str(path)


@pytest.fixture
def exp2_file(tmp_path):
    doc = scenario_doc([2, 2, 2, 2], 80_000, n=10, seed=8446, measurement=(0, 1),
                       d_mm_ns=15_400, d_jitter_max_ns=7_000)
    path = tmp_path / "exp2_small.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_parse_counts():
    assert _parse_counts("1..8") == [1, 2, 3, 4, 5, 6, 7, 8]
    assert _parse_counts("2,4,8") == [2, 4, 8]
    assert _parse_counts("5") == [5]


class TestRun:
    def test_writes_outputs(self, tmp_path, capsys):
        doc = scenario_doc([8], 32_000)
        doc["outputs"] = {"csv": "o.csv", "trace": "o.trace", "stats": "o.json"}
        path = tmp_path / "s.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        rc = main(["run", str(path), "--out-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "requests        30" in out
        for kind in ("csv", "trace", "stats"):
            assert f"wrote {kind:6s}" in out
        assert (tmp_path / "o.csv").exists()
        assert (tmp_path / "o.trace").exists()
        assert json.loads((tmp_path / "o.json").read_text(encoding="utf-8"))

    def test_no_oracle_check_flag(self, exp1_file, capsys):
        assert main(["run", exp1_file, "--no-oracle-check"]) == 0
        assert "best   config" in capsys.readouterr().out

    def test_missing_scenario_file(self, capsys):
        rc = main(["run", "/no/such/scenario.json"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_scenario_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops", encoding="utf-8")
        rc = main(["run", str(bad)])
        assert rc == 2
        assert "invalid scenario JSON" in capsys.readouterr().err


class TestSweep:
    def test_slope_and_csv(self, exp1_file, tmp_path, capsys):
        csv_path = tmp_path / "sweep.csv"
        rc = main(["sweep", "--scenario", exp1_file, "--devices", "1,4,8",
                   "--csv", str(csv_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "slope 900.0 ns/device" in out
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "devices,best_ns,worst_ns"
        assert len(lines) == 4

    def test_range_syntax(self, exp1_file, capsys):
        rc = main(["sweep", "--scenario", exp1_file, "--devices", "1..3"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("devices,best_us,worst_us")


class TestExtrapolate:
    def test_four_masters(self, capsys):
        rc = main(["extrapolate", "--racks", "1000", "--masters", "4"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "devices/segment  250" in out
        assert "predicted worst  412.0 us" in out

    def test_six_masters(self, capsys):
        rc = main(["extrapolate", "--racks", "1000", "--masters", "6"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "devices/segment  167" in out
        assert "predicted worst  337.3 us" in out

    def test_base_override(self, capsys):
        rc = main(["extrapolate", "--racks", "1000", "--masters", "4",
                   "--worst-base-us", "190", "--slope-ns", "900"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "predicted worst  415.0 us" in out

    def test_invalid_masters(self, capsys):
        assert main(["extrapolate", "--racks", "1000", "--masters", "0"]) == 2


class TestPdoCompare:
    def test_structural_only(self, exp2_file, capsys):
        rc = main(["pdo-compare", "--scenario", exp2_file,
                   "--cycles", "80000,32000", "--no-empirical"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "structural delta 48.0 us" in out
        assert "empirical" not in out

    def test_with_empirical(self, exp2_file, capsys):
        rc = main(["pdo-compare", "--scenario", exp2_file,
                   "--cycles", "80000,32000"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "structural delta 48.0 us" in out
        assert "empirical delta" in out


class TestCodec:
    def test_selftest(self, capsys):
        rc = main(["codec", "selftest"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("ok: ")
        count = int(out.split()[1])
        assert count >= 10


class TestNetctl:
    def write_commands(self, tmp_path, lines):
        path = tmp_path / "commands.jsonl"
        path.write_text(
            "\n".join(json.dumps(line) for line in lines) + "\n", encoding="utf-8"
        )
        return str(path)

    def test_full_session(self, tmp_path, capsys):
        commands = self.write_commands(tmp_path, [
            {"verb": "add-rule", "rule_id": "r1", "priority": 1,
             "service_tag": "storage"},
            {"verb": "inject-flows", "threshold_bps": 100_000_000, "flows": [
                {"flow_id": "f1", "src_tor": "a", "dst_tor": "b",
                 "rate_bps": 900_000_000},
                {"flow_id": "f2", "src_tor": "a", "dst_tor": "c",
                 "rate_bps": 1_000, "service_tag": "storage"},
            ]},
            {"verb": "allocate", "src_tor": "a", "dst_tor": "b"},
            {"verb": "activate", "path_id": 1},
            {"verb": "dump-table"},
            {"verb": "release", "path_id": 1},
        ])
        rc = main(["netctl", "exp1", commands])
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert rc == 0
        assert all(line["ok"] for line in lines)
        detected = lines[1]["detected"]
        assert {d["flow_id"]: d["mode"] for d in detected} == {
            "f1": "reactive", "f2": "proactive",
        }
        assert lines[2]["hops"] == [[0, 0, 1]]
        assert lines[3]["state"] == "Active"
        assert "." in lines[3]["config_time_us"]
        assert lines[4]["table"][0]["state"] == "Active"
        assert lines[5]["state"] == "Released"

    def test_failures_set_exit_code(self, tmp_path, capsys):
        commands = self.write_commands(tmp_path, [
            {"verb": "release", "path_id": 99},
            {"verb": "no-such-verb"},
        ])
        rc = main(["netctl", "exp1", commands])
        lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert rc == 1
        assert [line["ok"] for line in lines] == [False, False]
        assert lines[0]["error"] == "UnknownPath"
        assert lines[1]["error"] == "ValueError"

    def test_comments_and_blanks_skipped(self, tmp_path, capsys):
        path = tmp_path / "commands.jsonl"
        path.write_text(
            "# comment\n\n" + json.dumps({"verb": "dump-table"}) + "\n",
            encoding="utf-8",
        )
        rc = main(["netctl", "exp1", str(path)])
        lines = capsys.readouterr().out.splitlines()
        assert rc == 0
        assert len(lines) == 1


class TestServe:
    def test_end_to_end_over_tcp(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "meowsim.cli", "serve",
             "--southbound", "127.0.0.1:0", "--scenario", "exp1"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, bufsize=1,
        )
        try:
            banner = proc.stdout.readline().strip()
            assert banner.startswith("southbound listening on 127.0.0.1:")
            port = int(banner.rsplit(":", 1)[1])
            with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
                sock.sendall(json.dumps({
                    "type": "configure", "request_id": 1,
                    "targets": [{"segment": 0, "device": 7, "outputs": "0x0001"}],
                }).encode("utf-8") + b"\n")
                fh = sock.makefile("rb")
                ack = json.loads(fh.readline())
                done = json.loads(fh.readline())
            assert ack == {"request_id": 1, "type": "ack"}
            assert done["type"] == "complete"
            assert done["config_time_us"] == 116.0
        finally:
            proc.terminate()
            proc.wait(timeout=10)
