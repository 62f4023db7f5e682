"""Single-request baselines: in-order concatenation and shuffled-frame scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MalformedOutput, RunAborted
from .directives import parse_records
from .prompts import gvl_system_prompt, render_batch_context
from .rover import PredictionSeries, RunResult, call_with_retries
from .tokens import Frame

# Neither baseline has a model-written description of the initial scene, so a
# fixed phrase is used; this keeps each baseline at exactly one request.
FIRST_FRAME_DESCRIPTION = "the robot at the start of the task"


@dataclass(frozen=True)
class BaselineConfig:
    seed: int = 0
    max_model_calls: int = 3
    temperature: float = 0.0
    max_output_tokens: int = 4096
    first_frame_description: str = FIRST_FRAME_DESCRIPTION

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def shuffle_order(n: int, seed: int) -> list[int]:
    """Presentation order of n frames: index 0 stays first, 1..n-1 are permuted."""
    if n <= 1:
        return list(range(n))
    rng = np.random.default_rng(seed)
    return [0] + [int(i) + 1 for i in rng.permutation(n - 1)]


def _batch_run(frames: list[Frame], task: str, backend, cfg: BaselineConfig, order: list[int], method: str) -> RunResult:
    from ..gateway.types import ModelRequest

    if not frames:
        raise ValueError("at least one frame is required")
    shuffled = method == "gvl"
    listed = [frames[i] for i in order]
    ctx = render_batch_context(frames[0], listed, cfg.first_frame_description)
    system = gvl_system_prompt(task, shuffled=shuffled)
    n = len(frames)

    def build(attempt):
        return ModelRequest(
            system_prompt=system,
            context=ctx,
            max_output_tokens=cfg.max_output_tokens,
            temperature=cfg.temperature,
            meta={"method": method, "purpose": "batch", "task_description": task, "root_task": task, "attempt": attempt},
        )

    def validate(text):
        recs = parse_records(text)
        if len(recs) != n:
            raise MalformedOutput(f"expected {n} records, got {len(recs)}", text)
        return recs

    transcript: list[dict] = []
    try:
        recs, _ = call_with_retries(backend, build, validate, cfg.max_model_calls, transcript, {"node_id": "batch", "purpose": "batch"})
    except MalformedOutput as err:
        raise RunAborted(f"{method}: {err}") from err

    values = [0.0] * n
    descs = [""] * n
    ctx_frames = [0] * n
    for pos, (src, rec) in enumerate(zip(order, recs)):
        values[src] = float(rec.percent)
        descs[src] = rec.description
        # frames visible up to and including this one (initial scene counts)
        ctx_frames[src] = pos + 2
    if shuffled:
        values[0] = 0.0
    pred = PredictionSeries([f.index for f in frames], values, descs, ctx_frames, 1)
    return RunResult(None, pred, transcript, extra={"order": order})


def temporal_concat_run(frames: list[Frame], task: str, backend, cfg: BaselineConfig = BaselineConfig()) -> RunResult:
    return _batch_run(frames, task, backend, cfg, list(range(len(frames))), "temporal-concat")


def gvl_run(frames: list[Frame], task: str, backend, cfg: BaselineConfig = BaselineConfig(), order: list[int] | None = None) -> RunResult:
    """Shuffled-frame scoring; predictions are returned in temporal order with
    the first frame anchored at 0."""
    if order is None:
        order = shuffle_order(len(frames), cfg.seed)
    if sorted(order) != list(range(len(frames))) or (order and order[0] != 0):
        raise ValueError("order must be a permutation keeping index 0 first")
    return _batch_run(frames, task, backend, cfg, order, "gvl")
