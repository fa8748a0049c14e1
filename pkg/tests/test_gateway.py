import asyncio
import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest

from matbots.cli import main
from matbots.protocol import (PROTOCOL_SCHEMA_VERSION, ProtocolError, decode_message,
                              encode_message)
from matbots.trace import TraceError, TraceWriter, iter_ticks, read_trace

REPO = Path(__file__).resolve().parent.parent


def write_scenario(tmp_path: Path, **overrides) -> Path:
    doc = {
        "schema": 1,
        "kind": "scene",
        "scene_path": str(REPO / "scenes" / "flat.json"),
        "robot_count": 2,
        "duration": 1.0,
        "seed": 4,
    }
    doc.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


class TestCliRun:
    def test_valid_scenario_exit_zero(self, tmp_path, capsys):
        scenario = write_scenario(tmp_path)
        code = main(["run", str(scenario), "--out", str(tmp_path / "out"), "--no-figures"])
        assert code == 0
        assert (tmp_path / "out" / "metrics.json").exists()
        assert (tmp_path / "out" / "metrics.csv").exists()

    def test_robot_count_zero_rejected(self, tmp_path, capsys):
        scenario = write_scenario(tmp_path, robot_count=0)
        code = main(["run", str(scenario), "--out", str(tmp_path / "out")])
        assert code != 0
        assert "robot_count" in capsys.readouterr().err

    def test_missing_scene_rejected(self, tmp_path, capsys):
        scenario = write_scenario(tmp_path, scene_path=str(tmp_path / "nope.json"))
        code = main(["run", str(scenario), "--out", str(tmp_path / "out")])
        assert code != 0
        assert "not found" in capsys.readouterr().err

    def test_trace_and_figures(self, tmp_path):
        scenario = write_scenario(tmp_path, duration=0.5)
        out = tmp_path / "out"
        code = main(["run", str(scenario), "--out", str(out), "--trace"])
        assert code == 0
        assert (out / "trace.csv").exists()
        for fig in ("trajectories.png", "separation.png", "heights.png"):
            assert (out / fig).exists()


class TestCliBench:
    def test_bench_table_and_outputs(self, tmp_path, capsys):
        out = tmp_path / "bench"
        code = main(["bench", "--robots", "1,3", "--trials", "3", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "mean reach" in stdout
        lines = (out / "bench.csv").read_text().splitlines()
        assert lines[0].startswith("robots,")
        assert len(lines) == 3
        assert (out / "bench.png").exists()
        assert (out / "bench_1robots.json").exists()

    def test_bad_robot_list(self, tmp_path, capsys):
        assert main(["bench", "--robots", "0,x", "--out", str(tmp_path)]) != 0


class TestReplay:
    def make_trace(self, tmp_path) -> Path:
        scenario = write_scenario(tmp_path, duration=0.5)
        out = tmp_path / "out"
        main(["run", str(scenario), "--out", str(out), "--trace", "--no-figures"])
        return out / "trace.csv"

    def test_replay_reemits_recorded_ticks(self, tmp_path, capsys):
        trace = self.make_trace(tmp_path)
        capsys.readouterr()  # discard the run command's own output
        code = main(["replay", str(trace), "--speed", "1000.0"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        emitted = [json.loads(line) for line in lines]
        assert all(m["type"] == "world_state" for m in emitted)
        _meta, rows = read_trace(trace)
        recorded = [tick for tick, _ in iter_ticks(rows)]
        assert [m["tick"] for m in emitted] == recorded

    def test_replay_speed_scales_wall_clock(self, tmp_path, capsys):
        trace = self.make_trace(tmp_path)  # 0.5 s of sim time
        t0 = time.perf_counter()
        main(["replay", str(trace), "--speed", "2.0"])
        fast = time.perf_counter() - t0
        capsys.readouterr()
        t0 = time.perf_counter()
        main(["replay", str(trace), "--speed", "1.0"])
        normal = time.perf_counter() - t0
        capsys.readouterr()
        assert fast < normal
        assert fast == pytest.approx(0.25, rel=0.30)
        assert normal == pytest.approx(0.5, rel=0.30)

    def test_truncated_trace_names_last_valid_tick(self, tmp_path, capsys):
        trace = self.make_trace(tmp_path)
        text = trace.read_text().splitlines()
        (tmp_path / "broken.csv").write_text("\n".join(text[:20]) + "\n0,garbage\n")
        code = main(["replay", str(tmp_path / "broken.csv")])
        assert code != 0
        assert "last valid tick" in capsys.readouterr().err


class TestProtocol:
    def test_round_trip_every_type(self):
        cases = [
            ("world_state", {"robots": [], "time": 0.5}, 7),
            ("metrics", {"mean_reach_time_s": 1.6}, 9),
            ("hand_input", {"x": 0.1, "y": 0.2, "z": 0.05}, None),
            ("control", {"action": "pause"}, None),
            ("control_ack", {"action": "pause"}, None),
            ("error", {"message": "nope"}, None),
        ]
        for msg_type, payload, tick in cases:
            text = encode_message(msg_type, payload, tick)
            doc = decode_message(text)
            assert doc["type"] == msg_type
            assert doc["payload"] == payload
            assert doc.get("tick") == tick
            assert doc["schema"] == PROTOCOL_SCHEMA_VERSION
            assert decode_message(encode_message(doc["type"], doc["payload"],
                                                 doc.get("tick"))) == doc

    def test_rejects_malformed(self):
        with pytest.raises(ProtocolError):
            decode_message("not json{")
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"type": "world_state", "schema": 99, "payload": {}}))
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"type": "alien", "schema": 1, "payload": {}}))
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"type": "hand_input", "schema": 1,
                                       "payload": {"x": "a", "y": 0, "z": 0}}))
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"type": "control", "schema": 1,
                                       "payload": {"action": "self_destruct"}}))


class TestTraceFormat:
    def test_writer_reader_round_trip(self, tmp_path):
        path = tmp_path / "t.csv"
        snap = {"tick": 3, "time": 0.05, "robots": [
            {"id": 0, "x": 0.1, "y": 0.2, "yaw": 5.0, "height": 0.1, "tilt": 1.0,
             "vx": 0.01, "vy": -0.02, "grasped": False, "target": [0.3, 0.4],
             "assignment_id": "2:0"},
            {"id": 1, "x": 0.4, "y": 0.5, "yaw": -5.0, "height": 0.2, "tilt": 0.0,
             "vx": 0.0, "vy": 0.0, "grasped": True, "target": None,
             "assignment_id": None},
        ]}
        with TraceWriter(path, meta={"seed": 5}) as w:
            w.write_snapshot(snap)
        meta, rows = read_trace(path)
        assert meta["seed"] == "5"
        assert len(rows) == 2
        assert rows[0].x == 0.1 and rows[0].assignment == "2:0"
        assert rows[1].grasped and rows[1].target_x is None

    def test_rejects_non_trace(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("hello\n")
        with pytest.raises(TraceError):
            read_trace(p)


class TestServe:
    @pytest.fixture()
    def server_proc(self, tmp_path):
        port = _free_port()
        proc = subprocess.Popen(
            [sys.executable, "-m", "matbots.cli", "serve",
             "--scene", str(REPO / "scenes" / "flat.json"),
             "--port", str(port), "--robots", "2", "--seed", "3"],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
        _wait_for_port(port)
        yield port
        proc.terminate()
        proc.wait(timeout=5)

    def test_live_session(self, server_proc):
        port = server_proc
        asyncio.run(self._drive_session(port))

    async def _drive_session(self, port):
        from websockets.asyncio.client import connect
        uri = f"ws://127.0.0.1:{port}"
        async with connect(uri) as a, connect(uri) as b:
            # hand over the plate: a robot must arrive under the cursor
            await a.send(encode_message("hand_input", {"x": 0.35, "y": 0.35, "z": 0.1}))
            deadline = time.time() + 4.0
            in_band = False
            ticks_a = []
            while time.time() < deadline and not in_band:
                msg = decode_message(await asyncio.wait_for(a.recv(), 2.0))
                if msg["type"] != "world_state":
                    continue
                ticks_a.append(msg["tick"])
                for r in msg["payload"]["robots"]:
                    if r["in_stop_band"] and r["target"] is not None:
                        if abs(r["x"] - 0.35) < 0.02 and abs(r["y"] - 0.35) < 0.02:
                            in_band = True
            assert in_band, "no robot parked under the cursor within 4 s"
            assert all(t2 > t1 for t1, t2 in zip(ticks_a, ticks_a[1:]))

            # second client receives a subsequence of the same strictly
            # increasing stream
            ticks_b = []
            for _ in range(10):
                msg = decode_message(await asyncio.wait_for(b.recv(), 2.0))
                if msg["type"] == "world_state":
                    ticks_b.append(msg["tick"])
            assert all(t2 > t1 for t1, t2 in zip(ticks_b, ticks_b[1:]))

            # pause: ticks stop advancing
            await a.send(encode_message("control", {"action": "pause"}))
            await _expect_type(a, "control_ack")
            await asyncio.sleep(0.3)
            await _drain(a)
            with pytest.raises(asyncio.TimeoutError):
                await _expect_type(a, "world_state", timeout=0.4)
            await a.send(encode_message("control", {"action": "resume"}))
            await _expect_type(a, "control_ack")
            await _expect_type(a, "world_state", timeout=1.0)

            # malformed -> error reply, connection survives
            await a.send("&&&")
            err = await _expect_type(a, "error", timeout=1.0)
            assert "JSON" in err["payload"]["message"]

            # rejected control surfaces the server reason
            await a.send(encode_message("control", {"action": "place",
                                                    "robot": 0, "x": 9.0, "y": 9.0}))
            err = await _expect_type(a, "error", timeout=1.0)
            assert "place" in err["payload"]["message"]


async def _drain(ws):
    try:
        while True:
            await asyncio.wait_for(ws.recv(), 0.05)
    except asyncio.TimeoutError:
        return


async def _expect_type(ws, msg_type, timeout=2.0):
    deadline = time.time() + timeout
    while True:
        remaining = deadline - time.time()
        if remaining <= 0:
            raise asyncio.TimeoutError
        msg = decode_message(await asyncio.wait_for(ws.recv(), remaining))
        if msg["type"] == msg_type:
            return msg


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _wait_for_port(port, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                return
        except OSError:
            time.sleep(0.05)
    raise RuntimeError(f"server did not open port {port}")
