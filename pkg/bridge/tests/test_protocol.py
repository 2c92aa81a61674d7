import json
import subprocess
import sys


def spawn(model_spec: str) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", "augcode_bridge", "serve", model_spec],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        encoding="utf-8",
        bufsize=1,
    )


def handshake(proc: subprocess.Popen) -> dict:
    return json.loads(proc.stdout.readline())


def roundtrip(proc: subprocess.Popen, request: dict) -> dict:
    proc.stdin.write(json.dumps(request) + "\n")
    proc.stdin.flush()
    return json.loads(proc.stdout.readline())


class TestHandshake:
    def test_emitted_exactly_once_before_responses(self):
        proc = spawn("overlap")
        try:
            hello = handshake(proc)
            assert hello == {"protocol": "augcode-score", "version": 1}
            first = roundtrip(proc, {"id": 1, "x_tokens": ["a"], "y_tokens": ["a", "b"]})
            assert first == {"id": 1, "score": 1.0}
        finally:
            proc.stdin.close()
            assert proc.wait(timeout=10) == 0

    def test_unloadable_spec_exits_nonzero_before_handshake(self):
        proc = spawn("tfidf:/nonexistent/corpus.jsonl")
        out, err = proc.communicate(timeout=10)
        assert proc.returncode != 0
        assert out == ""  # no handshake
        assert "cannot load scorer" in err

    def test_unknown_spec_rejected(self):
        proc = spawn("quantum:foo")
        out, err = proc.communicate(timeout=10)
        assert proc.returncode != 0
        assert "unknown model spec" in err


class TestScoring:
    def test_overlap_examples(self):
        proc = spawn("overlap")
        try:
            handshake(proc)
            assert roundtrip(proc, {"id": 1, "x_tokens": ["a"], "y_tokens": ["a", "b"]}) == {
                "id": 1,
                "score": 1.0,
            }
            assert roundtrip(
                proc, {"id": 2, "x_tokens": ["a", "a", "b"], "y_tokens": ["a", "a", "c"]}
            ) == {"id": 2, "score": 2.0}
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_malformed_line_gets_error_with_id_minus_one(self):
        proc = spawn("overlap")
        try:
            handshake(proc)
            proc.stdin.write("this is { not json\n")
            proc.stdin.flush()
            response = json.loads(proc.stdout.readline())
            assert response["id"] == -1
            assert "error" in response
            # session survives
            assert roundtrip(proc, {"id": 5, "x_tokens": [], "y_tokens": []})["score"] == 0.0
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_parseable_bad_request_keeps_its_id(self):
        proc = spawn("overlap")
        try:
            handshake(proc)
            response = roundtrip(proc, {"id": 9, "x_tokens": "not-a-list", "y_tokens": []})
            assert response["id"] == 9
            assert "error" in response
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_every_pipelined_request_answered(self):
        proc = spawn("overlap")
        try:
            handshake(proc)
            n = 1000
            lines = [
                json.dumps({"id": i, "x_tokens": ["a"], "y_tokens": ["a"] * (i % 3)})
                for i in range(n)
            ]
            out, _ = proc.communicate("\n".join(lines) + "\n", timeout=60)
            responses = [json.loads(line) for line in out.strip().splitlines()]
            assert {r["id"] for r in responses} == set(range(n))
            assert all("score" in r for r in responses)
            assert proc.returncode == 0
        finally:
            if proc.poll() is None:
                proc.kill()

    def test_tfidf_spec_scores_from_corpus(self, corpus_small):
        proc = spawn(f"tfidf:{corpus_small}")
        try:
            handshake(proc)
            same = roundtrip(
                proc, {"id": 1, "x_tokens": ["a", "b"], "y_tokens": ["b", "a"]}
            )
            assert abs(same["score"] - 1.0) < 1e-12
            disjoint = roundtrip(proc, {"id": 2, "x_tokens": ["a"], "y_tokens": ["zz"]})
            assert disjoint["score"] == 0.0
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)
