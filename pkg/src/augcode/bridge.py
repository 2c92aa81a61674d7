"""Client side of the external scoring protocol.

An external scorer is any process that prints the handshake line
``{"protocol": "augcode-score", "version": 1}`` and then answers
JSON-line requests ``{"id": n, "x_tokens": [...], "y_tokens": [...]}``
with ``{"id": n, "score": s}``. Responses may arrive out of order; the
client reconciles them by id and presents the same synchronous scoring
interface as the in-process scorers.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Sequence

PROTOCOL_NAME = "augcode-score"
PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT = 30.0
RESPONSE_TIMEOUT = 120.0

_EOF = object()


class BridgeError(Exception):
    """Protocol violation or transport failure on the scoring bridge."""


class BridgeScorer:
    """Scores pairs through a subprocess speaking the line protocol."""

    def __init__(self, command: str | Sequence[str], handshake_timeout: float = HANDSHAKE_TIMEOUT):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._next_id = 0
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake(handshake_timeout)

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _read_line(self, timeout: float) -> str:
        try:
            item = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise BridgeError(f"no response from scorer within {timeout}s") from None
        if item is _EOF:
            raise BridgeError("transient: scorer process closed its output")
        return item

    def _handshake(self, timeout: float) -> None:
        line = self._read_line(timeout)
        try:
            hello = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"bad handshake line: {line!r}") from exc
        if hello.get("protocol") != PROTOCOL_NAME or hello.get("version") != PROTOCOL_VERSION:
            raise BridgeError(f"unsupported scorer handshake: {hello!r}")

    def _send(self, request: dict) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
        except (BrokenPipeError, ValueError) as exc:
            raise BridgeError(f"transient: scorer stdin closed ({exc})") from exc

    def score_many(
        self, x_tokens: Sequence[str], y_token_lists: Sequence[Sequence[str]]
    ) -> list[float]:
        """Pipeline one request per candidate, reconcile responses by id."""
        if not y_token_lists:
            return []
        ids = []
        for y_tokens in y_token_lists:
            request_id = self._next_id
            self._next_id += 1
            ids.append(request_id)
            self._send(
                {"id": request_id, "x_tokens": list(x_tokens), "y_tokens": list(y_tokens)}
            )
        assert self._proc.stdin is not None
        self._proc.stdin.flush()

        pending = set(ids)
        scores: dict[int, float] = {}
        while pending:
            line = self._read_line(RESPONSE_TIMEOUT)
            try:
                response = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(f"bad response line: {line!r}") from exc
            if "error" in response:
                raise BridgeError(f"scorer error for id {response.get('id')}: {response['error']}")
            rid = response.get("id")
            if rid not in pending:
                raise BridgeError(f"unexpected response id: {rid!r}")
            value = response.get("score")
            if not isinstance(value, (int, float)):
                raise BridgeError(f"non-numeric score for id {rid}: {value!r}")
            scores[rid] = float(value)
            pending.discard(rid)
        return [scores[i] for i in ids]

    def score_pair(self, x_tokens: Sequence[str], y_tokens: Sequence[str]) -> float:
        return self.score_many(x_tokens, [y_tokens])[0]

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "BridgeScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def bridge_scorer(command: str | Sequence[str], handshake_timeout: float = HANDSHAKE_TIMEOUT) -> BridgeScorer:
    """Launch an external scorer command and wrap it in the scorer interface."""
    return BridgeScorer(command, handshake_timeout=handshake_timeout)
