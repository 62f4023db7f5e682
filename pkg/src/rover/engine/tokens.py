"""Interleaved text/frame token sequences."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Frame:
    """One video frame.

    ``index`` is the position in the downsampled frame list, ``timestep`` the
    trajectory step it was taken from. ``image`` optionally carries encoded
    pixels for remote backends; ``video_id`` is the ground-truth handle used by
    the scripted oracle.
    """

    frame_id: str
    index: int
    timestep: int
    video_id: str = ""
    image: bytes | None = None
    mime: str = "image/png"

    def fingerprint(self) -> str:
        if self.image is None:
            return self.frame_id
        return f"{self.frame_id}#{hashlib.sha256(self.image).hexdigest()[:16]}"


@dataclass(frozen=True)
class Text:
    text: str


Segment = Frame | Text


@dataclass
class TokenSeq:
    segments: list = field(default_factory=list)

    def frames(self) -> list[Frame]:
        return [s for s in self.segments if isinstance(s, Frame)]

    def n_frames(self) -> int:
        return sum(1 for s in self.segments if isinstance(s, Frame))

    def text_units(self) -> int:
        """Whitespace-delimited words across text segments (a tokenizer-free size proxy)."""
        return sum(len(s.text.split()) for s in self.segments if isinstance(s, Text))

    def render(self) -> str:
        """Flat string form with frames shown as ``[IMG:<id>]``; used for hashing and logs."""
        out = []
        for s in self.segments:
            out.append(f"[IMG:{s.fingerprint()}]" if isinstance(s, Frame) else s.text)
        return "".join(out)

    def __add__(self, other: "TokenSeq") -> "TokenSeq":
        return TokenSeq(self.segments + other.segments)


def fill_images(template: str, frames: list[Frame]) -> TokenSeq:
    """Replace each ``[IMG]`` marker in ``template`` by the next frame."""
    parts = template.split("[IMG]")
    if len(parts) - 1 != len(frames):
        raise ValueError(f"template has {len(parts) - 1} image slots, got {len(frames)} frames")
    segs: list = []
    for i, part in enumerate(parts):
        if part:
            segs.append(Text(part))
        if i < len(frames):
            segs.append(frames[i])
    return TokenSeq(segs)
