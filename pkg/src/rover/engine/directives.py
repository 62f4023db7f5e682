"""Parsing of model output into directives."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MalformedOutput

NEXT_FRAME = "[next-frame]"
COMPLETION_PHRASE = "[task-complete]"


@dataclass(frozen=True)
class ProgressRecord:
    description: str
    percent: int


@dataclass(frozen=True)
class NewSubtask:
    description: str
    frame_description: str = ""


@dataclass(frozen=True)
class NextFrame:
    pass


@dataclass(frozen=True)
class TaskComplete:
    pass


_DESC = re.compile(r"^\s*Frame description:[ \t]*(.*?)\s*$", re.M)
_NEEDS = re.compile(r"^\s*The robot needs to:[ \t]*(.*?)\s*$", re.M)
_PCT = re.compile(r"^\s*(?:Subtask|Task) completion percentage:\s*([+-]?\d+(?:\.\d+)?)\s*%", re.M)


def _clip_percent(raw: str) -> int:
    p = int(round(float(raw)))
    return max(-100, min(100, p))


def parse_directive(text: str, completion_phrase: str = COMPLETION_PHRASE) -> list:
    """Turn one model response into a list of directives.

    A "The robot needs to:" line wins over any percentage in the same
    response. Raises MalformedOutput when nothing usable is found.
    """
    descs = _DESC.findall(text)
    need = _NEEDS.search(text)
    if need and need.group(1):
        return [NewSubtask(need.group(1), descs[0] if descs else "")]
    out: list = []
    pct = _PCT.search(text)
    if pct:
        desc = ""
        # the description that precedes the percentage line
        for m in _DESC.finditer(text):
            if m.start() < pct.start():
                desc = m.group(1)
        out.append(ProgressRecord(desc, _clip_percent(pct.group(1))))
    if NEXT_FRAME in text:
        out.append(NextFrame())
    if completion_phrase and completion_phrase in text:
        out.append(TaskComplete())
    if not out:
        raise MalformedOutput("no directive found in model output", text)
    return out


def parse_records(text: str) -> list[ProgressRecord]:
    """All (description, percent) pairs in order, for single-request baselines."""
    recs = []
    desc = ""
    for line in text.splitlines():
        m = _DESC.match(line)
        if m:
            desc = m.group(1)
            continue
        m = _PCT.match(line)
        if m:
            recs.append(ProgressRecord(desc, _clip_percent(m.group(1))))
            desc = ""
    return recs


def format_record(description: str, percent: int, task_level: bool = False) -> str:
    label = "Task" if task_level else "Subtask"
    return f"Frame description: {description}\n{label} completion percentage: {percent}%"
