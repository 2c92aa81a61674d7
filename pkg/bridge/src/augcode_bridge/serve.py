"""Long-running scorer process for the line-delimited scoring protocol.

Reads one JSON request per stdin line, writes one JSON response per
stdout line. A single handshake line announces the protocol before the
first response. Malformed requests produce error responses (id -1 when
the id itself is unreadable) instead of killing the session, so every
request line is answered exactly once.
"""

from __future__ import annotations

import argparse
import json
import sys

from .scorers import ScorerLoadError, load_scorer

PROTOCOL_NAME = "augcode-score"
PROTOCOL_VERSION = 1


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, ensure_ascii=False))
    sys.stdout.write("\n")
    sys.stdout.flush()


def _request_error(line: str) -> dict | None:
    """Validate a raw line; return an error response or None when valid."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": -1, "error": f"bad json: {exc.msg}"}
    if not isinstance(request, dict):
        return {"id": -1, "error": "request is not an object"}
    rid = request.get("id")
    if not isinstance(rid, int):
        return {"id": -1, "error": "missing integer id"}
    for side in ("x_tokens", "y_tokens"):
        value = request.get(side)
        if not isinstance(value, list) or any(not isinstance(t, str) for t in value):
            return {"id": rid, "error": f"{side} must be a list of strings"}
    return None


def serve(model_spec: str, stdin=None, emit=_emit) -> int:
    try:
        scorer = load_scorer(model_spec)
    except ScorerLoadError as exc:
        print(f"cannot load scorer: {exc}", file=sys.stderr)
        return 1

    emit({"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION})
    for line in stdin if stdin is not None else sys.stdin:
        line = line.strip()
        if not line:
            continue
        error = _request_error(line)
        if error is not None:
            emit(error)
            continue
        request = json.loads(line)
        try:
            value = scorer.score(request["x_tokens"], request["y_tokens"])
        except Exception as exc:  # a broken scorer must not kill the session
            emit({"id": request["id"], "error": f"scorer failure: {exc}"})
            continue
        emit({"id": request["id"], "score": float(value)})
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="augcode-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="serve scores over stdin/stdout")
    p.add_argument("model_spec", help="overlap | tfidf:<corpus.jsonl> | hf:<model-dir>")
    args = parser.parse_args(argv)
    return serve(args.model_spec)


if __name__ == "__main__":
    sys.exit(main())
