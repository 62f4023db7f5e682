"""Prompt templates and their rendering into request contexts.

The template files under ``templates/`` are stored verbatim; every rendering
helper below slices them rather than retyping any wording.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .tokens import Frame, TokenSeq, fill_images

_COND_HEADER = "###### If VLM has progressed beyond second frame of existing subtask"
_COND_END = "######"

# sentences dropped from the GVL system prompt to obtain the in-order variant
_SHUFFLE_CLAUSES = (
    "Note that these frames are in random order,\nso please pay attention to the individual frames when reasoning \nabout task completion percentage. ",
    " that are presented in random \norder",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files("rover.engine").joinpath("templates").joinpath(f"{name}.txt").read_text()


def _paragraphs(text: str) -> list[str]:
    return text.split("\n\n")


def rover_system_prompt(task_description: str, allow_subtasks: bool = True) -> str:
    text = load_template("rover_system")
    if not allow_subtasks:
        paras = _paragraphs(text)
        # drop the decomposition examples and the new-subtask response format
        keep = [p for p in paras if not p.startswith("If the given subtask") and not p.startswith("If you decompose")]
        text = "\n\n".join(keep)
    return text.replace("{task_description}", task_description)


def gvl_system_prompt(task_description: str, shuffled: bool = True) -> str:
    text = load_template("gvl_system")
    if not shuffled:
        for clause in _SHUFFLE_CLAUSES:
            if clause not in text:
                raise RuntimeError("gvl template no longer contains the expected shuffle clause")
            text = text.replace(clause, "")
    return text.replace("{task_description}", task_description)


@lru_cache(maxsize=None)
def rover_task_parts() -> tuple[str, str, str]:
    """(initial block, previous-frame block, current-frame line) of the task prompt."""
    text = load_template("rover_task")
    head, rest = text.split(_COND_HEADER + "\n")
    prev, tail = rest.split("\n" + _COND_END + "\n")
    return head.rstrip("\n"), prev, tail.strip("\n")


@lru_cache(maxsize=None)
def gvl_task_parts() -> tuple[str, str]:
    """(initial block, per-frame line pattern) of the GVL task prompt."""
    text = load_template("gvl_task")
    head, frames = text.split("\n\n")
    first = frames.splitlines()[0]
    return head, first.replace("Frame 1:", "Frame {i}:")


def _fmt_percent(p) -> str:
    return f"{p}%"


def render_rover_context(entries, current: Frame | None, window: bool = True) -> TokenSeq:
    """Task-prompt context for one ROVER request.

    ``entries`` are the line's (frame, description, percent) records so far. The
    first entry is shown as the initial scene at 0%. With the window, only the
    most recent previous entry follows; without it, every entry does.
    """
    head, prev, cur = rover_task_parts()
    blocks: list[str] = []
    frames: list[Frame] = []
    if entries:
        first = entries[0]
        blocks.append(head.replace("{first_frame_description}", first.description))
        frames.append(first.frame)
        later = entries[1:]
        if window:
            later = later[-1:]
        for k, e in enumerate(later):
            block = prev.replace("{prev_frame_description}", e.description)
            block = block.replace("{prev_subtask_progress}", _fmt_percent(e.percent if e.percent is not None else 0))
            if k < len(later) - 1:
                block = block.replace("Most recent previous frame:", f"Previous frame {k + 1}:")
            blocks.append(block)
            frames.append(e.frame)
    if current is not None:
        blocks.append(cur)
        frames.append(current)
    return fill_images("\n\n".join(blocks), frames)


def render_batch_context(first: Frame, listed: list[Frame], first_description: str) -> TokenSeq:
    """Single-request context: initial scene plus numbered frames, in the given order."""
    head, line = gvl_task_parts()
    text = head.replace("{first_frame_description}", first_description) + "\n\n"
    text += "\n".join(line.replace("{i}", str(i + 1)) for i in range(len(listed)))
    return fill_images(text, [first] + list(listed))
