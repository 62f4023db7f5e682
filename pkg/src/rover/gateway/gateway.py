"""Backend front-end: caching, retries with backoff, usage counters, transcripts."""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from pathlib import Path

from ..errors import BackendError
from .types import ModelRequest, ModelResponse, Usage

log = logging.getLogger(__name__)


def redact(text: str, secrets) -> str:
    for s in secrets:
        if s:
            text = text.replace(s, "[REDACTED]")
    return text


class Gateway:
    """Wraps a raw backend (anything with ``complete(request) -> str`` and a
    ``backend_id``) and exposes ``generate(request) -> ModelResponse``.

    Safe to share between threads: the cache, the counters and the transcript
    file are guarded by one lock.
    """

    def __init__(
        self,
        backend,
        cache: bool = True,
        max_attempts: int = 3,
        backoff_base: float = 1.0,
        sleep=time.sleep,
        transcript_path: str | Path | None = None,
        secrets=(),
        seed: int = 0,
    ):
        self.backend = backend
        self.backend_id = getattr(backend, "backend_id", type(backend).__name__)
        self.use_cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleep = sleep
        self.transcript_path = Path(transcript_path) if transcript_path else None
        self.secrets = tuple(secrets) + tuple(getattr(backend, "secrets", ()))
        self._cache: dict[str, str] = {}
        self._lock = threading.Lock()
        self._rng = random.Random(seed)
        self.totals = Usage()
        self.requests = 0
        self.backend_calls = 0
        self.cache_hits = 0

    def _usage(self, req: ModelRequest, text: str) -> Usage:
        return Usage(req.context.n_frames(), req.context.text_units() + len(req.system_prompt.split()), len(text.split()))

    def _account(self, usage: Usage, cached: bool) -> None:
        with self._lock:
            self.requests += 1
            self.cache_hits += int(cached)
            self.totals.input_frames += usage.input_frames
            self.totals.input_text_units += usage.input_text_units
            self.totals.output_text_units += usage.output_text_units

    def _call_backend(self, req: ModelRequest) -> str:
        err: BackendError | None = None
        for attempt in range(self.max_attempts):
            with self._lock:
                self.backend_calls += 1
            try:
                return self.backend.complete(req)
            except BackendError as e:
                err = e
                if not e.retryable or attempt == self.max_attempts - 1:
                    break
                with self._lock:
                    jitter = self._rng.uniform(0.5, 1.5)
                delay = self.backoff_base * (2**attempt) * jitter
                log.warning("backend %s failed (%s); retrying in %.2fs", self.backend_id, e, delay)
                self.sleep(delay)
        raise BackendError(f"{self.backend_id}: {err} (after {self.max_attempts} attempts)", getattr(err, "body", None))

    def generate(self, req: ModelRequest) -> ModelResponse:
        if req.context.n_frames() == 0 and not req.context.segments:
            raise ValueError("request context is empty")
        key = req.cache_key()
        text = None
        if self.use_cache:
            with self._lock:
                text = self._cache.get(key)
        cached = text is not None
        if not cached:
            text = self._call_backend(req)
            if self.use_cache:
                with self._lock:
                    self._cache[key] = text
        usage = self._usage(req, text)
        self._account(usage, cached)
        self._log(req, key, text, usage, cached)
        return ModelResponse(text, usage, self.backend_id, cached)

    def _log(self, req, key, text, usage, cached) -> None:
        if self.transcript_path is None:
            return
        rec = {
            "key": key,
            "backend": self.backend_id,
            "meta": req.meta,
            "frame_ids": [f.frame_id for f in req.context.frames()],
            "context": req.context.render(),
            "response": text,
            "usage": usage.to_dict(),
            "cached": cached,
        }
        line = redact(json.dumps(rec, sort_keys=True), self.secrets)
        with self._lock:
            with open(self.transcript_path, "a") as fh:
                fh.write(line + "\n")

    def counters(self) -> dict:
        with self._lock:
            return {
                "requests": self.requests,
                "backend_calls": self.backend_calls,
                "cache_hits": self.cache_hits,
                **self.totals.to_dict(),
            }


class CallableBackend:
    """Backend driven by a plain function ``fn(request) -> str``; handy for scripted tests."""

    def __init__(self, fn, backend_id: str = "callable"):
        self.fn = fn
        self.backend_id = backend_id

    def complete(self, req) -> str:
        return self.fn(req)
