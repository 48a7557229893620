from __future__ import annotations

import hashlib
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def sample_pair():
    """The bundled fully-annotated AI-domain pair (4 term occurrences)."""
    from parenterm.corpus import load

    ds = load(FIXTURES / "sample_pair.jsonl")
    return ds.pairs[0]


def stub_score(src: str, hyp: str, ref: str) -> float:
    """Deterministic per-item score in [0, 1); sensitive to all three texts."""
    digest = hashlib.sha256(f"{src}\x00{hyp}\x00{ref}".encode("utf-8")).digest()
    return int.from_bytes(digest[:6], "big") / 2**48


class StubSidecar:
    """In-process HTTP sidecar implementing the score/health protocol.

    ``respond`` may be replaced per test to inject protocol faults; it takes
    the parsed request payload and returns ``(status, body_dict)``.
    """

    def __init__(self):
        self.requests: list[dict] = []
        self.fail_next = 0  # number of upcoming requests to answer with 500
        self.respond = self.default_respond

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                if self.path == "/v1/health":
                    self._send(200, {"status": "ok", "model_ids": {
                        "comet": "stub-comet/1", "bertscore": "stub-bert/1"}})
                else:
                    self._send(404, {"error": "not found"})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
                stub.requests.append(payload)
                if stub.fail_next > 0:
                    stub.fail_next -= 1
                    self._send(500, {"error": "injected failure"})
                    return
                status, body = stub.respond(payload)
                self._send(status, body)

            def _send(self, status, body):
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def default_respond(self, payload):
        scores = [
            stub_score(item["src"], item["hyp"], item["ref"])
            for item in payload["items"]
        ]
        return 200, {
            "request_id": payload["request_id"],
            "scores": scores,
            "model_id": f"stub-{payload['metric_kind']}/1",
        }

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def sidecar():
    stub = StubSidecar()
    yield stub
    stub.close()
