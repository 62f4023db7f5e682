"""Request/response types shared by the engine and all backends."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..engine.tokens import TokenSeq


@dataclass
class ModelRequest:
    system_prompt: str
    context: TokenSeq
    max_output_tokens: int = 1024
    temperature: float = 0.0
    # routing hints for the scripted oracle and transcripts; only ``attempt``
    # participates in the cache key
    meta: dict = field(default_factory=dict)

    def cache_key(self) -> str:
        payload = {
            "system": self.system_prompt,
            "context": self.context.render(),
            "max_output_tokens": self.max_output_tokens,
            "temperature": self.temperature,
            "attempt": self.meta.get("attempt", 0),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class Usage:
    input_frames: int = 0
    input_text_units: int = 0
    output_text_units: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ModelResponse:
    text: str
    usage: Usage
    backend_id: str
    cached: bool = False
