"""Model backends behind one interface: scripted oracle, remote chat endpoint, record/replay."""

from .gateway import CallableBackend, Gateway, redact
from .oracle import OracleBackend, OracleBundle, OracleNoise
from .remote import EndpointConfig, RecordingBackend, RemoteBackend, ReplayBackend, ReplayStore, build_payload
from .types import ModelRequest, ModelResponse, Usage

__all__ = [
    "CallableBackend",
    "EndpointConfig",
    "Gateway",
    "ModelRequest",
    "ModelResponse",
    "OracleBackend",
    "OracleBundle",
    "OracleNoise",
    "RecordingBackend",
    "RemoteBackend",
    "ReplayBackend",
    "ReplayStore",
    "Usage",
    "build_payload",
    "redact",
]
