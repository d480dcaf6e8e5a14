import json
import socket
import sys
import threading

import numpy as np
import pytest

from srsaudit.bridge import BridgeClient, BridgeSrs
from srsaudit.core import Voice
from srsaudit.errors import BridgeProtocolError, BridgeTimeoutError, DimensionMismatchError
from srsaudit.srs import QueryLedger

FAKE_BACKEND = r"""
import array, base64, json, sys

mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
DIM = 4

def handle(msg):
    if msg["op"] == "hello":
        if mode == "bad-hello":
            return {"op": "nope"}
        if mode == "zero-dim":
            return {"op": "hello", "version": 1, "dim": 0, "sample_rate": 16000}
        return {"op": "hello", "version": 1, "dim": DIM, "sample_rate": 16000}
    if msg["op"] == "embed":
        if mode == "error":
            return {"op": "error", "id": msg["id"], "message": "boom"}
        if mode == "silent":
            return None
        if mode == "garbage":
            return "not json"
        pcm = array.array("f")
        pcm.frombytes(base64.b64decode(msg["pcm_b64"]))
        vals = list(pcm[:DIM]) + [0.0] * max(0, DIM - len(pcm))
        if mode == "wrong-dim":
            vals = vals[:2]
        reply_id = msg["id"] + 1 if mode == "bad-id" else msg["id"]
        return {"op": "embed", "id": reply_id, "embedding": vals}
    return {"op": "error", "id": msg.get("id", -1), "message": "unknown op"}

for line in sys.stdin:
    reply = handle(json.loads(line))
    if reply is None:
        continue
    if reply == "not json":
        sys.stdout.write("{{{ not json\n")
    else:
        sys.stdout.write(json.dumps(reply) + "\n")
    sys.stdout.flush()
"""


def spawn_backend(mode="ok", timeout=30.0):
    return BridgeClient.spawn([sys.executable, "-c", FAKE_BACKEND, mode], timeout=timeout)


def sample_voice(values=(0.5, -0.25, 0.125, 1.0, 9.0)):
    return Voice("spk", "v0", np.array(values, dtype=np.float64), 16000)


def test_handshake_reports_dim_and_rate():
    with spawn_backend() as client:
        assert client.dim == 4
        assert client.sample_rate == 16000


def test_embed_roundtrips_pcm_floats():
    with spawn_backend() as client:
        emb = client.embed(sample_voice())
        # backend echoes the first four PCM floats; float32 exact for these
        assert np.array_equal(emb.values, [0.5, -0.25, 0.125, 1.0])


def test_embed_ids_increment():
    with spawn_backend() as client:
        client.embed(sample_voice())
        client.embed(sample_voice())
        assert client._next_id == 2


def test_mismatched_reply_id_rejected():
    with spawn_backend("bad-id") as client:
        with pytest.raises(BridgeProtocolError):
            client.embed(sample_voice())


def test_wrong_dimension_rejected():
    with spawn_backend("wrong-dim") as client:
        with pytest.raises(DimensionMismatchError):
            client.embed(sample_voice())


def test_backend_error_op_raises():
    with spawn_backend("error") as client:
        with pytest.raises(BridgeProtocolError, match="boom"):
            client.embed(sample_voice())


def test_backend_garbage_reply_raises():
    with spawn_backend("garbage") as client:
        with pytest.raises(BridgeProtocolError, match="invalid JSON"):
            client.embed(sample_voice())


def test_backend_silence_times_out():
    with spawn_backend("silent", timeout=1.0) as client:
        with pytest.raises(BridgeTimeoutError):
            client.embed(sample_voice())


def test_bad_hello_rejected():
    with pytest.raises(BridgeProtocolError):
        spawn_backend("bad-hello")


def test_nonpositive_dim_rejected():
    with pytest.raises(BridgeProtocolError):
        spawn_backend("zero-dim")


def test_tcp_transport():
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.bind(("127.0.0.1", 0))
    server.listen(1)
    port = server.getsockname()[1]

    def serve():
        conn, _ = server.accept()
        fh = conn.makefile("rw", encoding="utf-8", newline="\n")
        for line in fh:
            msg = json.loads(line)
            if msg["op"] == "hello":
                reply = {"op": "hello", "version": 1, "dim": 2, "sample_rate": 8000}
            else:
                reply = {"op": "embed", "id": msg["id"], "embedding": [1.0, 0.0]}
            fh.write(json.dumps(reply) + "\n")
            fh.flush()
        conn.close()

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()
    with BridgeClient.connect("127.0.0.1", port, timeout=10.0) as client:
        assert client.dim == 2 and client.sample_rate == 8000
        emb = client.embed(Voice("s", "v", np.zeros(4), 8000))
        assert np.array_equal(emb.values, [1.0, 0.0])
    server.close()


def test_bridge_srs_bumps_ledger():
    with spawn_backend() as client:
        srs = BridgeSrs(client)
        ledger = QueryLedger()
        srs.embed(sample_voice(), ledger)
        srs.embed(sample_voice(), ledger)
        assert ledger.counts() == (0, 0, 2)
