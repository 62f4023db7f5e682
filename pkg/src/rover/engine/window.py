"""Context construction for reasoning lines: sliding window and parent/child hand-off."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ProtocolError
from .prompts import render_rover_context
from .tokens import Frame, TokenSeq


@dataclass(frozen=True)
class Entry:
    """A frame in a reasoning line together with the text generated for it.

    ``percent`` is None for entries spliced in from a child summary.
    """

    frame: Frame
    description: str
    percent: int | None = None
    summary: bool = False


@dataclass(frozen=True)
class ChildContext:
    description: str
    entries: tuple[Entry, ...]


def apply_window(y: list[Entry], o_next: Frame, enabled: bool = True) -> TokenSeq:
    """Request context for the next frame.

    With the window: the line's first frame, the most recent previous frame and
    ``o_next`` (so at most three frames). Without: every frame of the line.
    """
    return render_rover_context(list(y), o_next, window=enabled)


def derive_child_context(y: list[Entry], new_subtask, o_next: Frame | None = None) -> ChildContext:
    """Starting context for a spawned line.

    The frame on which the spawn was requested becomes the child's initial
    scene, prefilled with the parent's description of it at 0%.
    """
    frame = o_next if o_next is not None else (y[-1].frame if y else None)
    if frame is None:
        raise ProtocolError("cannot spawn a subtask from a line without frames")
    desc = new_subtask.frame_description if o_next is not None else y[-1].description
    return ChildContext(new_subtask.description, (Entry(frame, desc, 0),))


def summarize_child(child) -> Entry:
    """Final frame of a finished child line plus its final description."""
    if not child.records:
        raise ProtocolError(f"child line {child.node_id} produced no records")
    last = child.y[-1] if child.y else None
    if last is None:
        r = child.records[-1]
        return Entry(r.frame, r.description, None, summary=True)
    return Entry(last.frame, last.description, None, summary=True)
