"""Built-in stub implementation of the remote wire protocol.

Serves /score and /fill_mask with deterministic arithmetic so contract tests
and golden fixtures never need a real model.  The same scoring rules back the
model server's stub backend, keeping the fixtures byte-stable on both sides.
"""
from __future__ import annotations

import json
import math
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def stub_score_probs(text: str) -> list[float]:
    """Two-class softmax over even/odd codepoint counts."""
    even = sum(1 for ch in text if ord(ch) % 2 == 0)
    odd = len(text) - even
    z0, z1 = 0.3 * even, 0.3 * odd
    m = max(z0, z1)
    e0, e1 = math.exp(z0 - m), math.exp(z1 - m)
    s = e0 + e1
    return [e0 / s, e1 / s]


def stub_fill_mask(text: str, char_start: int, char_end: int, k: int) -> list[dict]:
    """Characters outside the span ranked by frequency, original excluded."""
    original = text[char_start:char_end]
    context = text[:char_start] + text[char_end:]
    counts = Counter(ch for ch in context if ch != original)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [{"piece": ch, "score": float(c)} for ch, c in ranked[:k]]


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _reply(self, code: int, body: dict) -> None:
        data = json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/healthz":
            self._reply(200, {"status": "ok"})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except (ValueError, UnicodeDecodeError):
            self._reply(400, {"error": "invalid JSON body"})
            return
        if self.path == "/score":
            texts = body.get("texts")
            if not isinstance(texts, list) or not texts or not all(
                isinstance(t, str) for t in texts
            ):
                self._reply(400, {"error": "texts must be a non-empty list of strings"})
                return
            self._reply(200, {"probabilities": [stub_score_probs(t) for t in texts]})
        elif self.path == "/fill_mask":
            text = body.get("text")
            a = body.get("char_start")
            b = body.get("char_end")
            k = body.get("k")
            if (
                not isinstance(text, str)
                or not isinstance(a, int)
                or not isinstance(b, int)
                or not isinstance(k, int)
                or k < 1
                or not (0 <= a < b <= len(text))
            ):
                self._reply(400, {"error": "invalid fill_mask request"})
                return
            self._reply(200, {"candidates": stub_fill_mask(text, a, b, k)})
        else:
            self._reply(404, {"error": "not found"})


class StubServer:
    """In-process HTTP server; use as a context manager in tests."""

    def __init__(self, port: int = 0):
        self._server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "StubServer":
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
        return False
