"""Minimal external scorer used by the bridge client tests.

Modes:
  overlap        score = |x multiset ∩ y multiset| (immediate replies)
  reverse-pairs  like overlap, but answers every 2 requests in reverse
  error          replies {"id": n, "error": "boom"} to everything
  malformed      emits one garbage line after the handshake
  no-handshake   exits without the handshake line
  die-after-one  answers one request, then exits
"""

import json
import sys
from collections import Counter


def overlap(request):
    x = Counter(request["x_tokens"])
    y = Counter(request["y_tokens"])
    return float(sum((x & y).values()))


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "overlap"
    if mode == "no-handshake":
        return 0
    print(json.dumps({"protocol": "augcode-score", "version": 1}), flush=True)
    if mode == "malformed":
        print("this is not json", flush=True)
        return 0

    held = []
    answered = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if mode == "error":
            print(json.dumps({"id": request["id"], "error": "boom"}), flush=True)
            continue
        response = {"id": request["id"], "score": overlap(request)}
        if mode == "reverse-pairs":
            held.append(response)
            if len(held) == 2:
                for item in reversed(held):
                    print(json.dumps(item), flush=True)
                held.clear()
        else:
            print(json.dumps(response), flush=True)
            answered += 1
            if mode == "die-after-one" and answered == 1:
                return 0
    for item in held:
        print(json.dumps(item), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
