"""Record types and line-delimited JSON corpus I/O.

A corpus file holds one JSON object per line (UTF-8, LF endings),
optionally gzip-compressed. Every record carries exactly the twelve
canonical attributes, emitted in a fixed key order so that identical
records always serialize to identical bytes.
"""

from __future__ import annotations

import gzip
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

FIELD_ORDER = (
    "repo",
    "path",
    "url",
    "func_name",
    "original_string",
    "language",
    "code",
    "code_tokens",
    "docstring",
    "docstring_tokens",
    "sha",
    "partition",
)

PARTITIONS = ("train", "valid", "test")

SCENARIO_IDS = (0, 1, 2, 3, 4, 5)
DEFAULT_SCENARIO = 0

_SHA_RE = re.compile(r"^[0-9a-f]{40}$")
_GZIP_MAGIC = b"\x1f\x8b"


class CorpusError(Exception):
    """Raised for unrecoverable corpus I/O problems."""


@dataclass
class LineError:
    """One per-line validation diagnostic from reading a corpus file."""

    line: int
    message: str


def validate_scenario_id(scenario: int) -> int:
    if scenario not in SCENARIO_IDS:
        raise ValueError(f"scenario id must be in {list(SCENARIO_IDS)}, got {scenario!r}")
    return scenario


@dataclass
class CodeRecord:
    """One function in the twelve-attribute corpus schema.

    ``extra`` holds unknown keys found on input; they are preserved and
    re-emitted after the canonical attributes but are not part of the
    schema itself.
    """

    repo: str
    path: str
    url: str
    func_name: str
    original_string: str
    language: str
    code: str
    code_tokens: list[str]
    docstring: str
    docstring_tokens: list[str]
    sha: str
    partition: str
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def validate(self) -> None:
        if self.partition not in PARTITIONS:
            raise ValueError(f"partition must be one of {PARTITIONS}, got {self.partition!r}")
        if self.sha and not _SHA_RE.match(self.sha):
            raise ValueError(f"sha must be empty or 40 lowercase hex chars, got {self.sha!r}")
        for name in ("code_tokens", "docstring_tokens"):
            value = getattr(self, name)
            if not isinstance(value, list) or any(not isinstance(t, str) for t in value):
                raise ValueError(f"{name} must be a list of strings")

    @property
    def source_key(self) -> tuple[str, str, str]:
        return (self.repo, self.path, self.func_name)

    def to_json(self) -> str:
        payload = {name: getattr(self, name) for name in FIELD_ORDER}
        for key in sorted(self.extra):
            if key not in payload:
                payload[key] = self.extra[key]
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "CodeRecord":
        missing = [name for name in FIELD_ORDER if name not in obj]
        if missing:
            raise ValueError(f"missing required attribute(s): {', '.join(missing)}")
        extra = {k: v for k, v in obj.items() if k not in FIELD_ORDER}
        record = cls(*(obj[name] for name in FIELD_ORDER), extra=extra)
        record.validate()
        return record


@dataclass
class CommitMessage:
    """A commit log message fetched for a (repo, sha) pair."""

    repo: str
    sha: str
    message: str
    fetched_at: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.repo, self.sha)


def _open_for_read(path: Path) -> io.TextIOWrapper:
    raw = open(path, "rb")
    head = raw.read(2)
    raw.seek(0)
    if head == _GZIP_MAGIC:
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8")
    return io.TextIOWrapper(raw, encoding="utf-8")


def read_corpus(
    path: str | Path,
    expected_partition: str | None = None,
    errors: list[LineError] | None = None,
) -> Iterator[CodeRecord]:
    """Yield records from a JSONL corpus file in file order.

    Malformed lines are appended to ``errors`` (with 1-based line
    numbers) when a collector list is given; otherwise the first bad
    line raises :class:`CorpusError`. Every input line ends up as
    either a record or a diagnostic, never silently dropped.
    """
    path = Path(path)
    if expected_partition is not None and expected_partition not in PARTITIONS:
        raise ValueError(f"expected_partition must be one of {PARTITIONS}")
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")

    def report(line_no: int, message: str) -> None:
        if errors is None:
            raise CorpusError(f"{path}:{line_no}: {message}")
        errors.append(LineError(line_no, message))

    with _open_for_read(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                report(line_no, "blank line")
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                report(line_no, f"malformed JSON: {exc.msg}")
                continue
            if not isinstance(obj, dict):
                report(line_no, "line is not a JSON object")
                continue
            try:
                record = CodeRecord.from_dict(obj)
            except ValueError as exc:
                report(line_no, str(exc))
                continue
            if expected_partition is not None and record.partition != expected_partition:
                report(
                    line_no,
                    f"partition mismatch: expected {expected_partition!r}, got {record.partition!r}",
                )
                continue
            yield record


def write_corpus(records: Iterable[CodeRecord], path: str | Path) -> int:
    """Write records as JSONL (gzip when the path ends in .gz); returns the count.

    Gzip output pins mtime to zero so identical records always produce
    identical bytes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "wb") as raw:
        if path.suffix == ".gz":
            handle = io.TextIOWrapper(
                gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename=""),
                encoding="utf-8",
                newline="\n",
            )
        else:
            handle = io.TextIOWrapper(raw, encoding="utf-8", newline="\n")
        with handle:
            for record in records:
                record.validate()
                handle.write(record.to_json())
                handle.write("\n")
                count += 1
    return count
