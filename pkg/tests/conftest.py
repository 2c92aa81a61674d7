"""Shared fixtures: a local stub GitHub API server and tiny corpora."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from augcode.corpus import CodeRecord


def make_record(i: int = 0, partition: str = "train", **overrides) -> CodeRecord:
    fields = dict(
        repo="acme/tools",
        path=f"pkg/mod_{i}.py",
        url="",
        func_name=f"func_{i}",
        original_string=f'def func_{i}(x):\n    """Do thing {i}."""\n    return x\n',
        language="python",
        code=f"def func_{i}(x):\n    return x\n",
        code_tokens=["def", f"func_{i}", "(", "x", ")", ":", "return", "x"],
        docstring=f"Do thing {i}.",
        docstring_tokens=["do", "thing", str(i)],
        sha="",
        partition=partition,
    )
    fields.update(overrides)
    return CodeRecord(**fields)


class _StubState:
    def __init__(self):
        self.routes: dict[str, tuple] = {}
        self.calls: list[str] = []


class _Handler(BaseHTTPRequestHandler):
    state: _StubState

    def log_message(self, *args):
        pass

    def do_GET(self):
        self.state.calls.append(self.path)
        route = self.state.routes.get(self.path)
        if route is None:
            self._reply(404, {"message": "Not Found"})
            return
        kind = route[0]
        if kind == "ok":
            self._reply(200, {"sha": self.path.rsplit("/", 1)[-1], "commit": {"message": route[1]}})
        elif kind == "rate_limited":
            self._reply(
                403,
                {"message": "API rate limit exceeded"},
                headers={"x-ratelimit-remaining": "0", "x-ratelimit-reset": "1700000000"},
            )
        elif kind == "bad_body":
            self._reply(200, {"unexpected": True})
        else:
            self._reply(500, {"message": "boom"})

    def _reply(self, status: int, payload: dict, headers: dict | None = None):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for key, value in (headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)


class StubGitHub:
    """Local HTTP server impersonating the commits endpoint."""

    def __init__(self):
        self.state = _StubState()
        handler = type("Handler", (_Handler,), {"state": self.state})
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def calls(self) -> list[str]:
        return self.state.calls

    def route_commit(self, repo: str, sha: str, message: str) -> None:
        self.state.routes[f"/repos/{repo}/commits/{sha}"] = ("ok", message)

    def route_raw(self, repo: str, sha: str, kind: str) -> None:
        self.state.routes[f"/repos/{repo}/commits/{sha}"] = (kind,)

    def close(self) -> None:
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_github():
    server = StubGitHub()
    yield server
    server.close()
