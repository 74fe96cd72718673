"""Line-delimited JSON server exposing environments to external trainers.

One request per line, one response per line, in request order. Commands:

* ``{"cmd": "make", "config": {...}}`` -> ``{"env_id": n, "obs_size": ..., "num_actions": ...}``
* ``{"cmd": "reset", "env_id": n}`` -> observation + mask
* ``{"cmd": "step", "env_id": n, "action": i}`` -> observation, reward, flags, mask, info
* ``{"cmd": "mask", "env_id": n}`` -> current mask
* ``{"cmd": "close", "env_id": n}`` -> ``{"closed": true}``
* ``{"cmd": "shutdown"}`` -> ``{"ok": true}`` and the server exits

Responses echo ``env_id``; failures produce ``{"error": ...}`` without
touching any environment. Observations and rewards are bit-identical to the
in-process environment for equal configs, seeds, and action sequences
(floats serialize with full round-trip precision). A TCP transport binds
localhost; each connection owns a private env-id namespace.
"""

from __future__ import annotations

import io
import json
import socketserver
import sys
import threading
from typing import Any, IO

from .environment import EnvConfig, PartitionEnv


class _Shutdown(Exception):
    pass


class EnvTable:
    """Environments owned by one connection."""

    def __init__(self) -> None:
        self._envs: dict[int, PartitionEnv] = {}
        self._next_id = 0

    def make(self, config: EnvConfig) -> tuple[int, PartitionEnv]:
        env_id = self._next_id
        self._next_id += 1
        self._envs[env_id] = PartitionEnv(config)
        return env_id, self._envs[env_id]

    def get(self, env_id: int) -> PartitionEnv:
        if env_id not in self._envs:
            raise KeyError(f"unknown env_id {env_id}")
        return self._envs[env_id]

    def close(self, env_id: int) -> None:
        if env_id not in self._envs:
            raise KeyError(f"unknown env_id {env_id}")
        del self._envs[env_id]


def _mask_list(mask) -> list[bool]:
    return [bool(x) for x in mask]


def handle_request(table: EnvTable, request: dict) -> dict:
    """Dispatch a single decoded request; never raises except for shutdown."""
    env_id = request.get("env_id")
    try:
        cmd = request.get("cmd")
        if cmd == "shutdown":
            raise _Shutdown()
        if cmd == "make":
            config = EnvConfig.from_json_dict(request["config"])
            env_id, env = table.make(config)
            return {
                "env_id": env_id,
                "obs_size": env.obs_size,
                "num_actions": env.num_actions,
                "num_slices": env.num_slices,
            }
        if cmd == "reset":
            env = table.get(int(env_id))
            obs, mask = env.reset()
            return {"env_id": env_id, "obs": obs.tolist(), "mask": _mask_list(mask)}
        if cmd == "step":
            env = table.get(int(env_id))
            result = env.step(int(request["action"]))
            return {
                "env_id": env_id,
                "obs": result.observation.tolist(),
                "mask": _mask_list(result.mask),
                "reward": result.reward,
                "terminated": result.terminated,
                "truncated": result.truncated,
                "info": result.info,
            }
        if cmd == "mask":
            env = table.get(int(env_id))
            return {"env_id": env_id, "mask": _mask_list(env.compute_mask())}
        if cmd == "close":
            table.close(int(env_id))
            return {"env_id": env_id, "closed": True}
        return {"env_id": env_id, "error": f"unknown cmd {cmd!r}"}
    except _Shutdown:
        raise
    except Exception as exc:
        return {"env_id": env_id, "error": str(exc)}


def serve_lines(reader: IO[str], writer: IO[str]) -> bool:
    """Serve one connection; returns True when a shutdown was requested."""
    table = EnvTable()
    for line in reader:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response: dict[str, Any] = {"error": f"parse error: {exc}"}
        else:
            try:
                response = handle_request(table, request)
            except _Shutdown:
                writer.write(json.dumps({"ok": True}) + "\n")
                writer.flush()
                return True
        writer.write(json.dumps(response) + "\n")
        writer.flush()
    return False


def serve_stdio() -> int:
    serve_lines(sys.stdin, sys.stdout)
    return 0


class _TCPHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        text_in = io.TextIOWrapper(self.rfile, encoding="utf-8")
        text_out = io.TextIOWrapper(self.wfile, encoding="utf-8", write_through=True)
        try:
            if serve_lines(text_in, text_out):
                threading.Thread(target=self.server.shutdown, daemon=True).start()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            text_in.detach()
            text_out.detach()


class EnvTCPServer(socketserver.ThreadingTCPServer):
    """Each connection gets its own env-id namespace; shutdown stops the server."""

    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(port: int, host: str = "127.0.0.1") -> int:
    with EnvTCPServer((host, port), _TCPHandler) as server:
        server.serve_forever(poll_interval=0.05)
    return 0


def serve(transport: str = "stdio", port: int = 7777, host: str = "127.0.0.1") -> int:
    """Run the server until shutdown; returns the process exit code."""
    if transport == "stdio":
        return serve_stdio()
    if transport == "tcp":
        return serve_tcp(port, host)
    raise ValueError(f"unknown transport {transport!r}")
