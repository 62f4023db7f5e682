"""Recursive reasoning over video frames with subtask spawning."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..errors import CompositionError, MalformedOutput, RunAborted
from .directives import NewSubtask, ProgressRecord, TaskComplete, parse_directive
from .prompts import render_rover_context, rover_system_prompt
from .tokens import Frame
from .window import Entry, apply_window, derive_child_context, summarize_child

log = logging.getLogger(__name__)

METHODS = ("rover", "rover-window-only", "rover-recursion-only", "temporal-concat", "gvl")


@dataclass(frozen=True)
class RunConfig:
    window_enabled: bool = True
    recursion_enabled: bool = True
    max_depth: int = 8
    max_model_calls_per_frame: int = 3
    frame_budget: int = 30
    seed: int = 0
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_model_calls_per_frame < 1:
            raise ValueError("max_model_calls_per_frame must be >= 1")

    @classmethod
    def for_method(cls, method: str, **kw) -> "RunConfig":
        flags = {
            "rover": (True, True),
            "rover-window-only": (True, False),
            "rover-recursion-only": (False, True),
            "rover-no-window-no-recursion": (False, False),
        }
        if method not in flags:
            raise ValueError(f"{method!r} is not a recursive-engine method")
        w, r = flags[method]
        return cls(window_enabled=w, recursion_enabled=r, **kw)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Record:
    frame: Frame
    description: str
    percent: int
    context_frames: int

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame.frame_id,
            "frame_index": self.frame.index,
            "timestep": self.frame.timestep,
            "description": self.description,
            "percent": self.percent,
            "context_frames": self.context_frames,
        }


@dataclass
class ReasoningNode:
    node_id: str
    subtask_description: str
    depth: int = 0
    records: list[Record] = field(default_factory=list)
    children: list[tuple[int, "ReasoningNode"]] = field(default_factory=list)
    terminal_summary: dict | None = None
    y: list[Entry] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "subtask_description": self.subtask_description,
            "depth": self.depth,
            "records": [r.to_dict() for r in self.records],
            "children": [{"position": p, "node": c.to_dict()} for p, c in self.children],
            "terminal_summary": self.terminal_summary,
        }

    def walk(self):
        yield self
        for _, c in self.children:
            yield from c.walk()


@dataclass
class PredictionSeries:
    """Per-frame composed progress in percent, in temporal frame order."""

    frame_indices: list[int]
    values: list[float]
    descriptions: list[str]
    context_frames: list[int]
    n_lines: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "PredictionSeries":
        return cls(**d)


@dataclass
class RunResult:
    tree: ReasoningNode | None
    prediction: PredictionSeries
    transcript: list[dict]
    warnings: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tree": None if self.tree is None else self.tree.to_dict(),
            "prediction": self.prediction.to_dict(),
            "warnings": self.warnings,
            "extra": self.extra,
        }


def call_with_retries(backend, build_request, validate, max_calls: int, transcript: list, info: dict):
    """Generate until ``validate`` accepts the parsed output, resampling on
    malformed text. Raises MalformedOutput after ``max_calls`` attempts."""
    last_err = None
    for attempt in range(max_calls):
        req = build_request(attempt)
        resp = backend.generate(req)
        entry = dict(info)
        entry.update(
            attempt=attempt,
            frame_ids=[f.frame_id for f in req.context.frames()],
            n_frames=req.context.n_frames(),
            response=resp.text,
            cached=resp.cached,
        )
        try:
            out = validate(resp.text)
        except MalformedOutput as err:
            entry["error"] = str(err)
            transcript.append(entry)
            last_err = err
            continue
        entry["directives"] = [type(d).__name__ for d in out] if isinstance(out, list) else out.get("summary")
        transcript.append(entry)
        return out, req
    raise MalformedOutput(f"no valid output after {max_calls} attempts", getattr(last_err, "text", ""))


class _Run:
    def __init__(self, frames, task_description, backend, cfg: RunConfig):
        self.frames = list(frames)
        self.task = task_description
        self.backend = backend
        self.cfg = cfg
        self.cursor = 0
        self.transcript: list[dict] = []
        self.warnings: list[str] = []
        self.root = ReasoningNode("0", task_description, 0)

    def _request(self, node: ReasoningNode, ctx, purpose: str):
        from ..gateway.types import ModelRequest

        system = rover_system_prompt(node.subtask_description, self.cfg.recursion_enabled)

        def build(attempt):
            return ModelRequest(
                system_prompt=system,
                context=ctx,
                max_output_tokens=self.cfg.max_output_tokens,
                temperature=self.cfg.temperature,
                meta={
                    "method": "rover",
                    "purpose": purpose,
                    "task_description": node.subtask_description,
                    "root_task": self.task,
                    "node_id": node.node_id,
                    "is_root": node.depth == 0,
                    "allow_subtasks": self.cfg.recursion_enabled,
                    "attempt": attempt,
                },
            )

        def validate(text):
            dirs = parse_directive(text)
            usable = any(isinstance(d, (NewSubtask, ProgressRecord)) for d in dirs)
            if not usable and not (node.depth > 0 and any(isinstance(d, TaskComplete) for d in dirs)):
                raise MalformedOutput("response has neither a progress record nor a new subtask", text)
            return dirs

        info = {"node_id": node.node_id, "purpose": purpose}
        try:
            dirs, _ = call_with_retries(
                self.backend, build, validate, self.cfg.max_model_calls_per_frame, self.transcript, info
            )
        except MalformedOutput as err:
            raise RunAborted(f"node {node.node_id}: {err}", partial=self.root) from err
        return dirs

    def _last_percent(self, node: ReasoningNode) -> int:
        return node.records[-1].percent if node.records else 0

    def _consume(self, node: ReasoningNode, frame: Frame, dirs: list, n_ctx: int) -> bool:
        """Apply one response for ``frame``; returns True when the line should end."""
        ns = next((d for d in dirs if isinstance(d, NewSubtask)), None)
        if ns is not None:
            if self.cfg.recursion_enabled and node.depth < self.cfg.max_depth:
                self._spawn(node, frame, ns, n_ctx)
                return False
            msg = f"node {node.node_id}: new subtask {ns.description!r} at frame {frame.index} treated as continuation"
            if self.cfg.recursion_enabled:
                log.warning(msg)
            self.warnings.append(msg)
            rec = ProgressRecord(ns.frame_description, self._last_percent(node))
        else:
            rec = next((d for d in dirs if isinstance(d, ProgressRecord)), None)
        if rec is None:
            # child signalled completion without describing this frame
            return True
        node.records.append(Record(frame, rec.description, rec.percent, n_ctx))
        node.y.append(Entry(frame, rec.description, rec.percent))
        self.cursor += 1
        if node.depth > 0 and (rec.percent >= 100 or any(isinstance(d, TaskComplete) for d in dirs)):
            return True
        return False

    def _spawn(self, node: ReasoningNode, frame: Frame, ns: NewSubtask, n_ctx: int) -> None:
        ctx = derive_child_context(node.y, ns, frame)
        child = ReasoningNode(f"{node.node_id}.{len(node.children) + 1}", ctx.description, node.depth + 1)
        first = ctx.entries[0]
        # the spawn frame is recorded once, in the child, at the anchored 0%
        child.records.append(Record(frame, first.description, 0, n_ctx))
        child.y.append(first)
        node.children.append((len(node.records), child))
        self.cursor += 1
        self._line(child)
        summary = summarize_child(child)
        child.terminal_summary = {
            "frame_id": summary.frame.frame_id,
            "frame_index": summary.frame.index,
            "description": summary.description,
        }
        node.y.append(Entry(summary.frame, summary.description, self._last_percent(node), summary=True))

    def _line(self, node: ReasoningNode) -> None:
        while self.cursor < len(self.frames):
            frame = self.frames[self.cursor]
            ctx = apply_window(node.y, frame, self.cfg.window_enabled)
            dirs = self._request(node, ctx, "step")
            if self._consume(node, frame, dirs, ctx.n_frames()):
                return

    def run(self) -> ReasoningNode:
        f0 = self.frames[0]
        ctx = render_rover_context([], f0)
        dirs = self._request(self.root, ctx, "first-frame")
        self._consume(self.root, f0, dirs, ctx.n_frames())
        self._line(self.root)
        return self.root


def rover_run(frames: list[Frame], task_description: str, backend, cfg: RunConfig = RunConfig()) -> RunResult:
    """Run recursive reasoning over ``frames``; ``backend`` must expose ``generate(request)``."""
    if not frames:
        raise ValueError("rover_run needs at least one frame")
    run = _Run(frames, task_description, backend, cfg)
    tree = run.run()
    pred = compose_progress(tree, [f.index for f in frames])
    return RunResult(tree, pred, run.transcript, run.warnings)


def flatten_lines(tree: ReasoningNode) -> list[list[Record]]:
    """Record runs in depth-first order; a node's records are split at each spawn."""
    lines: list[list[Record]] = []

    def visit(node: ReasoningNode):
        spawns = dict()
        for pos, child in node.children:
            spawns.setdefault(pos, []).append(child)
        cur: list[Record] = []
        for i in range(len(node.records) + 1):
            for child in spawns.get(i, []):
                if cur:
                    lines.append(cur)
                    cur = []
                visit(child)
            if i < len(node.records):
                cur.append(node.records[i])
        if cur:
            lines.append(cur)

    visit(tree)
    return lines


def compose_progress(tree: ReasoningNode, frame_indices: list[int] | None = None) -> PredictionSeries:
    """Divide each line's percents by the number of lines and offset each line
    by the previous line's final composed value."""
    lines = flatten_lines(tree)
    m = len(lines)
    by_frame: dict[int, tuple[float, Record]] = {}
    offset = 0.0
    for line in lines:
        vals = [offset + r.percent / m for r in line]
        for v, r in zip(vals, line):
            if r.frame.index in by_frame:
                raise CompositionError(f"frame {r.frame.index} covered twice")
            by_frame[r.frame.index] = (v, r)
        offset = vals[-1]
    order = sorted(by_frame) if frame_indices is None else list(frame_indices)
    missing = [i for i in order if i not in by_frame]
    if missing or len(by_frame) != len(order):
        raise CompositionError(f"frames not covered exactly once (missing {missing[:5]})")
    return PredictionSeries(
        frame_indices=order,
        values=[by_frame[i][0] for i in order],
        descriptions=[by_frame[i][1].description for i in order],
        context_frames=[by_frame[i][1].context_frames for i in order],
        n_lines=m,
    )
