"""Chat-completions style HTTP backend, plus record/replay wrappers."""

from __future__ import annotations

import base64
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..engine.tokens import Frame, Text
from ..errors import BackendError

ENV_BASE_URL = "ROVER_API_BASE"
ENV_MODEL = "ROVER_MODEL"
ENV_API_KEY = "ROVER_API_KEY"


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str = ENV_API_KEY
    timeout: float = 120.0
    path: str = "/chat/completions"

    @classmethod
    def from_env(cls, env=None) -> "EndpointConfig":
        env = os.environ if env is None else env
        base, model = env.get(ENV_BASE_URL), env.get(ENV_MODEL)
        if not base or not model:
            raise BackendError(f"set {ENV_BASE_URL} and {ENV_MODEL} to use the remote backend")
        return cls(base.rstrip("/"), model)

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


def build_payload(req, model: str) -> dict:
    """Chat payload: system message, then one user message whose content
    interleaves text parts and inline base64 image parts in context order."""
    parts = []
    for seg in req.context.segments:
        if isinstance(seg, Text):
            parts.append({"type": "text", "text": seg.text})
        elif isinstance(seg, Frame):
            if seg.image is not None:
                data = base64.b64encode(seg.image).decode("ascii")
                parts.append({"type": "image_url", "image_url": {"url": f"data:{seg.mime};base64,{data}"}})
            else:
                parts.append({"type": "text", "text": f"<frame {seg.frame_id} (no image available)>"})
    return {
        "model": model,
        "messages": [
            {"role": "system", "content": req.system_prompt},
            {"role": "user", "content": parts},
        ],
        "temperature": req.temperature,
        "max_tokens": req.max_output_tokens,
    }


class RemoteBackend:
    def __init__(self, cfg: EndpointConfig, client: httpx.Client | None = None):
        self.cfg = cfg
        self.client = client or httpx.Client(timeout=cfg.timeout)
        self.backend_id = f"remote:{cfg.model}"
        key = cfg.api_key()
        self.secrets = (key,) if key else ()

    def complete(self, req) -> str:
        headers = {"Content-Type": "application/json"}
        key = self.cfg.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self.client.post(self.cfg.url, json=build_payload(req, self.cfg.model), headers=headers)
        except httpx.HTTPError as e:
            raise BackendError(f"transport error: {type(e).__name__}: {e}", retryable=True) from e
        body = resp.text
        if resp.status_code == 429 or resp.status_code >= 500:
            raise BackendError(f"HTTP {resp.status_code}", body, retryable=True)
        if resp.status_code >= 300:
            raise BackendError(f"HTTP {resp.status_code}", body)
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendError("response does not match the chat-completions schema", body) from e
        if isinstance(content, list):
            content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
        if not isinstance(content, str):
            raise BackendError("response content is not text", body)
        return content


class ReplayStore:
    """Line-delimited {key, text} records keyed by request hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._data: dict[str, str] = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._data[rec["key"]] = rec["text"]

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, text: str) -> None:
        with self._lock:
            if key in self._data:
                return
            self._data[key] = text
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fh.write(json.dumps({"key": key, "text": text}, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self._data)


class RecordingBackend:
    def __init__(self, inner, store: ReplayStore):
        self.inner = inner
        self.store = store
        self.backend_id = getattr(inner, "backend_id", "recorded")
        self.secrets = getattr(inner, "secrets", ())

    def complete(self, req) -> str:
        key = req.cache_key()
        hit = self.store.get(key)
        if hit is not None:
            return hit
        text = self.inner.complete(req)
        self.store.put(key, text)
        return text


class ReplayBackend:
    """Serves captured responses only; a miss is an error, never a network call."""

    def __init__(self, store: ReplayStore, backend_id: str = "replay"):
        self.store = store
        self.backend_id = backend_id

    def complete(self, req) -> str:
        text = self.store.get(req.cache_key())
        if text is None:
            raise BackendError(f"replay miss for request {req.cache_key()[:12]}")
        return text
