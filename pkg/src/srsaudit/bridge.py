"""Client for out-of-process embedding backends.

The wire protocol is newline-delimited JSON over either a child process's
stdio or a TCP connection. One handshake, then embed requests with
incrementing ids; PCM is base64-encoded little-endian float32.
"""
from __future__ import annotations

import base64
import json
import socket
import subprocess
import threading

import numpy as np

from .core import Embedding, Voice
from .errors import BridgeProtocolError, BridgeTimeoutError, DimensionMismatchError

PROTOCOL_VERSION = 1


class _StdioTransport:
    def __init__(self, argv: list[str], timeout: float):
        self.timeout = timeout
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1,
        )

    def send_line(self, line: str):
        if self.proc.poll() is not None:
            raise BridgeProtocolError("backend process exited")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def recv_line(self) -> str:
        result: list[str | None] = [None]

        def reader():
            result[0] = self.proc.stdout.readline()

        t = threading.Thread(target=reader, daemon=True)
        t.start()
        t.join(self.timeout)
        if t.is_alive():
            raise BridgeTimeoutError(f"no response within {self.timeout}s")
        line = result[0]
        if not line:
            raise BridgeProtocolError("backend closed its output stream")
        return line

    def close(self):
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.settimeout(timeout)
        self._file = self.sock.makefile("rw", encoding="utf-8", newline="\n")

    def send_line(self, line: str):
        self._file.write(line + "\n")
        self._file.flush()

    def recv_line(self) -> str:
        try:
            line = self._file.readline()
        except socket.timeout as exc:
            raise BridgeTimeoutError("no response before socket timeout") from exc
        if not line:
            raise BridgeProtocolError("backend closed the connection")
        return line

    def close(self):
        self._file.close()
        self.sock.close()


class BridgeClient:
    """Synchronous request/response client over one bridge transport."""

    def __init__(self, transport):
        self._transport = transport
        self._next_id = 0
        self._lock = threading.Lock()
        self.dim: int | None = None
        self.sample_rate: int | None = None
        self._handshake()

    @classmethod
    def spawn(cls, argv: list[str], timeout: float = 30.0) -> "BridgeClient":
        return cls(_StdioTransport(argv, timeout))

    @classmethod
    def connect(cls, host: str, port: int, timeout: float = 30.0) -> "BridgeClient":
        return cls(_TcpTransport(host, port, timeout))

    def _handshake(self):
        reply = self._roundtrip({"op": "hello", "version": PROTOCOL_VERSION})
        if reply.get("op") != "hello":
            raise BridgeProtocolError(f"expected hello reply, got {reply.get('op')!r}")
        for key in ("dim", "sample_rate"):
            if not isinstance(reply.get(key), int) or reply[key] <= 0:
                raise BridgeProtocolError(f"hello reply missing positive integer {key!r}")
        self.dim = reply["dim"]
        self.sample_rate = reply["sample_rate"]

    def _roundtrip(self, message: dict) -> dict:
        self._transport.send_line(json.dumps(message))
        line = self._transport.recv_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"backend sent invalid JSON: {line[:200]!r}") from exc
        if not isinstance(reply, dict):
            raise BridgeProtocolError("backend reply is not a JSON object")
        if reply.get("op") == "error":
            raise BridgeProtocolError(f"backend error: {reply.get('message', '(no message)')}")
        return reply

    def embed(self, voice: Voice) -> Embedding:
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            pcm = voice.samples.astype("<f4").tobytes()
            reply = self._roundtrip({
                "op": "embed",
                "id": request_id,
                "sample_rate": voice.sample_rate,
                "pcm_b64": base64.b64encode(pcm).decode("ascii"),
            })
        if reply.get("op") != "embed":
            raise BridgeProtocolError(f"expected embed reply, got {reply.get('op')!r}")
        if reply.get("id") != request_id:
            raise BridgeProtocolError(f"reply id {reply.get('id')} != request id {request_id}")
        values = np.asarray(reply.get("embedding", []), dtype=np.float64)
        if values.ndim != 1 or values.size != self.dim:
            raise DimensionMismatchError(
                f"backend returned {values.size} dims, handshake promised {self.dim}"
            )
        return Embedding(values)

    def close(self):
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BridgeSrs:
    """White-box SRS facade backed by a bridge client; usable wherever the
    in-process synthetic SRS is."""

    def __init__(self, client: BridgeClient):
        self.client = client

    def embed(self, voice: Voice, ledger=None) -> Embedding:
        emb = self.client.embed(voice)
        if ledger is not None:
            ledger.bump_embed()
        return emb
