import io
import json
import random
import socket
import subprocess
import sys
import threading

import numpy as np
from qpart.circuit import gen_random
from qpart.environment import EnvConfig, PartitionEnv
from qpart.envserver import EnvTCPServer, _TCPHandler, serve_lines


def env_config_dict(seed=0, mask_mode="soft"):
    circuit = gen_random(4, 4, 0.9, seed)
    return EnvConfig(circuit=circuit, num_cores=2, mask_mode=mask_mode).to_json_dict()


def run_session(requests):
    reader = io.StringIO("\n".join(json.dumps(r) for r in requests) + "\n")
    writer = io.StringIO()
    serve_lines(reader, writer)
    return [json.loads(line) for line in writer.getvalue().splitlines()]


class TestSessions:
    def test_make_reset_obs_length(self):
        responses = run_session(
            [
                {"cmd": "make", "config": env_config_dict()},
                {"cmd": "reset", "env_id": 0},
            ]
        )
        assert responses[0]["env_id"] == 0
        assert responses[0]["obs_size"] == 23
        assert len(responses[1]["obs"]) == 23
        assert len(responses[1]["mask"]) == 11

    def test_scripted_session_matches_in_process(self):
        config = EnvConfig(circuit=gen_random(4, 30, 0.9, 3), num_cores=2, mask_mode="soft")
        env = PartitionEnv(config)
        obs, mask = env.reset()
        rng = random.Random(17)
        actions, expected = [], []
        for _ in range(100):
            if env.state.done:
                break
            allowed = np.flatnonzero(mask)
            action = int(allowed[rng.randrange(len(allowed))])
            actions.append(action)
            result = env.step(action)
            expected.append(result)
            mask = result.mask

        requests = [{"cmd": "make", "config": config.to_json_dict()}, {"cmd": "reset", "env_id": 0}]
        requests += [{"cmd": "step", "env_id": 0, "action": a} for a in actions]
        responses = run_session(requests)
        reset_obs, _ = PartitionEnv(config).reset()
        assert responses[1]["obs"] == reset_obs.tolist()
        for response, result in zip(responses[2:], expected):
            assert response["reward"] == result.reward
            assert response["obs"] == result.observation.tolist()
            assert response["mask"] == [bool(x) for x in result.mask]
            assert response["terminated"] == result.terminated
            assert response["truncated"] == result.truncated
            assert response["info"] == result.info

    def test_action_out_of_range_keeps_env(self):
        responses = run_session(
            [
                {"cmd": "make", "config": env_config_dict()},
                {"cmd": "reset", "env_id": 0},
                {"cmd": "step", "env_id": 0, "action": 999},
                {"cmd": "mask", "env_id": 0},
            ]
        )
        assert "out of range" in responses[2]["error"]
        assert responses[3]["mask"] == responses[1]["mask"]

    def test_unknown_env_id(self):
        responses = run_session([{"cmd": "reset", "env_id": 7}])
        assert "unknown env_id" in responses[0]["error"]

    def test_malformed_line(self):
        reader = io.StringIO('{"cmd": "make"\n{"cmd": "bogus"}\n')
        writer = io.StringIO()
        serve_lines(reader, writer)
        first, second = [json.loads(l) for l in writer.getvalue().splitlines()]
        assert "parse error" in first["error"]
        assert "unknown cmd" in second["error"]

    def test_step_finished_episode_errors(self):
        config = env_config_dict()
        config["budget_per_slice"] = 1
        config["mask_mode"] = "none"
        responses = run_session(
            [
                {"cmd": "make", "config": config},
                {"cmd": "reset", "env_id": 0},
                {"cmd": "step", "env_id": 0, "action": 1},
                {"cmd": "step", "env_id": 0, "action": 1},
            ]
        )
        assert responses[2].get("truncated") is True
        assert "finished" in responses[3]["error"]

    def test_close_and_shutdown(self):
        reader = io.StringIO(
            "\n".join(
                [
                    json.dumps({"cmd": "make", "config": env_config_dict()}),
                    json.dumps({"cmd": "close", "env_id": 0}),
                    json.dumps({"cmd": "reset", "env_id": 0}),
                    json.dumps({"cmd": "shutdown"}),
                    json.dumps({"cmd": "make", "config": env_config_dict()}),
                ]
            )
            + "\n"
        )
        writer = io.StringIO()
        assert serve_lines(reader, writer) is True
        lines = [json.loads(l) for l in writer.getvalue().splitlines()]
        assert lines[1]["closed"] is True
        assert "unknown env_id" in lines[2]["error"]
        assert lines[3] == {"ok": True}
        assert len(lines) == 4  # nothing served after shutdown

    def test_responses_in_request_order(self):
        requests = [{"cmd": "make", "config": env_config_dict(seed=s)} for s in range(5)]
        responses = run_session(requests)
        assert [r["env_id"] for r in responses] == list(range(5))

    def test_multiple_envs_independent(self):
        cfg = env_config_dict()
        responses = run_session(
            [
                {"cmd": "make", "config": cfg},
                {"cmd": "make", "config": cfg},
                {"cmd": "reset", "env_id": 0},
                {"cmd": "reset", "env_id": 1},
                {"cmd": "step", "env_id": 0, "action": 10},
                {"cmd": "mask", "env_id": 1},
            ]
        )
        assert responses[5]["mask"] == responses[3]["mask"]


class TestStdioSubprocess:
    def test_cli_serve_stdio(self):
        requests = [
            {"cmd": "make", "config": env_config_dict()},
            {"cmd": "reset", "env_id": 0},
            {"cmd": "shutdown"},
        ]
        payload = "\n".join(json.dumps(r) for r in requests) + "\n"
        proc = subprocess.run(
            [sys.executable, "-m", "qpart.cli", "serve", "--transport", "stdio"],
            input=payload,
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0
        lines = [json.loads(l) for l in proc.stdout.splitlines()]
        assert lines[0]["env_id"] == 0
        assert len(lines[1]["obs"]) == 23
        assert lines[2] == {"ok": True}


class TestTcp:
    def test_tcp_session(self):
        server = EnvTCPServer(("127.0.0.1", 0), _TCPHandler)
        port = server.server_address[1]
        thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.01})
        thread.start()
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=10) as sock:
                fh = sock.makefile("rw", encoding="utf-8")
                fh.write(json.dumps({"cmd": "make", "config": env_config_dict()}) + "\n")
                fh.flush()
                made = json.loads(fh.readline())
                assert made["env_id"] == 0
                fh.write(json.dumps({"cmd": "reset", "env_id": 0}) + "\n")
                fh.flush()
                reset = json.loads(fh.readline())
                assert len(reset["obs"]) == 23
        finally:
            server.shutdown()
            thread.join(timeout=10)
            server.server_close()
