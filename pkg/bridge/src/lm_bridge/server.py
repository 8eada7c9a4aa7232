"""Line-protocol server.

One JSON object per line.  Request: {"context": [int...], "top_k": int}.
Response: {"ids": [...], "probs": [...]} in descending probability,
ties broken by ascending id, probabilities summing to 1 within 1e-6.
A malformed line yields {"error": "..."} and the connection stays open.
Identical requests produce byte-identical response lines.

All inference is serialized through one lock; connections are handled
concurrently but queue for the model.
"""

from __future__ import annotations

import json
import socketserver
import threading

MAX_CONTEXT = 100_000
MAX_LINE = 10_000_000


class BridgeServer:
    def __init__(self, backend):
        self.backend = backend
        self._lock = threading.Lock()

    def handle_line(self, line: str) -> str:
        """One request line to one response line; never raises."""
        try:
            if len(line) > MAX_LINE:
                return json.dumps({"error": "request line too long"})
            try:
                request = json.loads(line)
            except json.JSONDecodeError as exc:
                return json.dumps({"error": f"bad json: {exc.msg}"})
            if not isinstance(request, dict):
                return json.dumps({"error": "request must be an object"})
            context = request.get("context")
            top_k = request.get("top_k")
            if not isinstance(context, list) or not all(
                isinstance(t, int) and not isinstance(t, bool) and t >= 0 for t in context
            ):
                return json.dumps({"error": "context must be a list of non-negative ints"})
            if len(context) > MAX_CONTEXT:
                return json.dumps({"error": "context too long"})
            if not isinstance(top_k, int) or isinstance(top_k, bool) or top_k < 2:
                return json.dumps({"error": "top_k must be an int >= 2"})
            vocab = self.backend.tokenizer.vocab_size
            if any(t >= vocab for t in context):
                return json.dumps({"error": "context id outside the vocabulary"})
            with self._lock:
                ids, probs = self.backend.distribution(context, top_k)
            return json.dumps({"ids": ids, "probs": probs})
        except Exception as exc:  # a single request must never kill the loop
            return json.dumps({"error": f"internal: {type(exc).__name__}: {exc}"})

    def serve_stdio(self, stdin, stdout) -> None:
        for line in stdin:
            if not line.strip():
                continue
            stdout.write(self.handle_line(line) + "\n")
            stdout.flush()

    def serve_tcp(self, host: str, port: int):
        """Returns the serving TCPServer; caller drives serve_forever."""
        bridge = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for raw in self.rfile:
                    try:
                        line = raw.decode("utf-8", errors="replace")
                    except Exception:
                        continue
                    if not line.strip():
                        continue
                    self.wfile.write((bridge.handle_line(line) + "\n").encode("utf-8"))

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        return Server((host, port), Handler)


def export_profile(backend, vocab_path, merges_path) -> None:
    backend.tokenizer.export(vocab_path, merges_path)
