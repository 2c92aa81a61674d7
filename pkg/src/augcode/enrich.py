"""Commit-message enrichment via the GitHub REST API.

Every (repo, sha) resolves through a persistent one-file-per-commit
cache first; misses go to the API unless offline mode forbids network
access entirely. 404s are cached as negative entries (commits are
immutable), transient failures are never cached.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import CodeRecord, CommitMessage

logger = logging.getLogger(__name__)

_SHA_RE = re.compile(r"^[0-9a-f]{40}$")

OUTCOME_HIT_CACHE = "hit_cache"
OUTCOME_FETCHED = "fetched"
OUTCOME_NOT_FOUND = "not_found"
OUTCOME_SKIPPED_NO_SHA = "skipped_no_sha"
OUTCOME_ERROR = "error"


@dataclass
class EnrichmentConfig:
    cache_dir: str | Path = ".augcode-cache"
    api_base_url: str = "https://api.github.com"
    token_env: str = "GITHUB_TOKEN"
    offline: bool = False
    max_requests_per_hour: int = 5000
    request_timeout: float = 10.0
    workers: int = 4

    def auth_token(self) -> str | None:
        return os.environ.get(self.token_env) or None


@dataclass
class EnrichmentResult:
    record_key: tuple[str, str]
    outcome: str
    message: str | None = None
    detail: str = ""


class SlidingWindowRateLimiter:
    """Blocks until issuing a request keeps the last hour under the cap."""

    def __init__(self, max_per_hour: int, clock=time.monotonic, sleep=time.sleep):
        if max_per_hour < 1:
            raise ValueError("max_requests_per_hour must be > 0")
        self.max_per_hour = max_per_hour
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._stamps and now - self._stamps[0] >= 3600.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.max_per_hour:
                    self._stamps.append(now)
                    return
                wait = 3600.0 - (now - self._stamps[0])
            self.sleep(max(wait, 0.001))


class CommitCache:
    """One JSON file per (repo, sha), written atomically."""

    def __init__(self, cache_dir: str | Path):
        self.root = Path(cache_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, repo: str, sha: str) -> Path:
        safe_repo = repo.replace("/", "__") or "_unknown"
        return self.root / safe_repo / f"{sha}.json"

    def get(self, repo: str, sha: str) -> dict | None:
        path = self._path(repo, sha)
        if not path.exists():
            return None
        try:
            with open(path, encoding="utf-8") as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError):
            logger.warning("unreadable cache entry dropped: %s", path)
            return None

    def put(self, repo: str, sha: str, outcome: str, message: str | None) -> None:
        path = self._path(repo, sha)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "repo": repo,
            "sha": sha,
            "outcome": outcome,
            "message": message,
            "fetched_at": datetime.now(timezone.utc).isoformat(),
        }
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(entry, handle, ensure_ascii=False)
        os.replace(tmp, path)


class GitHubCommitClient:
    """Fetches commit messages with caching and rate limiting."""

    def __init__(self, config: EnrichmentConfig, rate_limiter: SlidingWindowRateLimiter | None = None):
        self.config = config
        self.cache = CommitCache(config.cache_dir)
        self.rate_limiter = rate_limiter or SlidingWindowRateLimiter(config.max_requests_per_hour)
        self._local = threading.local()

    def _session(self):
        import requests

        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            session.headers["Accept"] = "application/vnd.github+json"
            token = self.config.auth_token()
            if token:
                session.headers["Authorization"] = f"Bearer {token}"
            self._local.session = session
        return session

    def fetch_commit_message(self, repo: str, sha: str) -> EnrichmentResult:
        key = (repo, sha)
        if not sha or not _SHA_RE.match(sha):
            return EnrichmentResult(key, OUTCOME_SKIPPED_NO_SHA)

        cached = self.cache.get(repo, sha)
        if cached is not None:
            if cached.get("outcome") == OUTCOME_NOT_FOUND:
                return EnrichmentResult(key, OUTCOME_NOT_FOUND, detail="cached")
            return EnrichmentResult(key, OUTCOME_HIT_CACHE, message=cached.get("message"))

        if self.config.offline:
            return EnrichmentResult(key, OUTCOME_ERROR, detail="offline_miss")
        return self._fetch(repo, sha)

    def _fetch(self, repo: str, sha: str) -> EnrichmentResult:
        import requests

        key = (repo, sha)
        url = f"{self.config.api_base_url.rstrip('/')}/repos/{repo}/commits/{sha}"
        self.rate_limiter.acquire()
        try:
            response = self._session().get(url, timeout=self.config.request_timeout)
        except requests.RequestException as exc:
            return EnrichmentResult(key, OUTCOME_ERROR, detail=f"transient: {exc}")

        if response.status_code == 404:
            self.cache.put(repo, sha, OUTCOME_NOT_FOUND, None)
            return EnrichmentResult(key, OUTCOME_NOT_FOUND)
        if response.status_code == 403:
            remaining = response.headers.get("x-ratelimit-remaining")
            reset = response.headers.get("x-ratelimit-reset", "")
            if remaining == "0":
                return EnrichmentResult(
                    key, OUTCOME_ERROR, detail=f"rate_limited: retry after {reset}"
                )
            return EnrichmentResult(key, OUTCOME_ERROR, detail="forbidden")
        if response.status_code != 200:
            return EnrichmentResult(
                key, OUTCOME_ERROR, detail=f"http_{response.status_code}"
            )
        try:
            message = response.json()["commit"]["message"]
        except (ValueError, KeyError, TypeError):
            return EnrichmentResult(key, OUTCOME_ERROR, detail="protocol: bad body")
        if not isinstance(message, str):
            return EnrichmentResult(key, OUTCOME_ERROR, detail="protocol: bad message type")
        self.cache.put(repo, sha, OUTCOME_FETCHED, message)
        return EnrichmentResult(key, OUTCOME_FETCHED, message=message)


@dataclass
class EnrichmentSummary:
    counts: Counter = field(default_factory=Counter)

    def to_json(self) -> str:
        return json.dumps(
            {k: self.counts[k] for k in sorted(self.counts)},
            ensure_ascii=False,
            separators=(",", ":"),
        )


def enrich_corpus(
    records: Sequence[CodeRecord] | Iterable[CodeRecord],
    config: EnrichmentConfig,
    client: GitHubCommitClient | None = None,
) -> tuple[list[tuple[CodeRecord, CommitMessage | None]], EnrichmentSummary]:
    """Resolve a commit message (or not) for every record, in input order.

    Records sharing a (repo, sha) resolve through a single lookup. The
    summary counts one outcome per record, so counts always sum to the
    record count.
    """
    records = list(records)
    client = client or GitHubCommitClient(config)

    unique_keys: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for record in records:
        key = (record.repo, record.sha)
        if key not in seen:
            seen.add(key)
            unique_keys.append(key)

    resolved: dict[tuple[str, str], EnrichmentResult] = {}
    if config.workers > 1 and len(unique_keys) > 1 and not config.offline:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for result in pool.map(
                lambda key: client.fetch_commit_message(*key), unique_keys
            ):
                resolved[result.record_key] = result
    else:
        for key in unique_keys:
            resolved[key] = client.fetch_commit_message(*key)

    summary = EnrichmentSummary()
    out: list[tuple[CodeRecord, CommitMessage | None]] = []
    fetched_at = datetime.now(timezone.utc).isoformat()
    for record in records:
        result = resolved[(record.repo, record.sha)]
        summary.counts[result.outcome] += 1
        commit = None
        if result.message is not None:
            commit = CommitMessage(
                repo=record.repo,
                sha=record.sha,
                message=result.message,
                fetched_at=fetched_at,
            )
        out.append((record, commit))
    return out, summary


def fetch_commit_message(repo: str, sha: str, config: EnrichmentConfig) -> EnrichmentResult:
    """One-shot fetch through a fresh client (cache-first, offline-aware)."""
    return GitHubCommitClient(config).fetch_commit_message(repo, sha)


def cache_lookup(cache_dir: str | Path):
    """Commit lookup function backed by an existing cache directory."""
    cache = CommitCache(cache_dir)

    def lookup(repo: str, sha: str) -> CommitMessage | None:
        entry = cache.get(repo, sha)
        if entry is None or entry.get("message") is None:
            return None
        return CommitMessage(
            repo=repo,
            sha=sha,
            message=entry["message"],
            fetched_at=entry.get("fetched_at", ""),
        )

    return lookup
