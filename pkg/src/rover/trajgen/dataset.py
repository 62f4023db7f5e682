"""Level-targeted video synthesis and the default dataset layout."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

from ..errors import GenerationError
from .deviation import assemble_nonexpert
from .events import detect_events
from .expert import synth_expert_demo
from .kinematics import DEFAULT_CONFIG, GenConfig
from .levels import LEVEL_COUNTS, level_from_log, milestone_times, n_levels
from .rng import stream
from .types import TERMINATE, Branch, DeviationPlan, EventLog, TaskSpec, Trajectory


@dataclass(frozen=True)
class Video:
    video_id: str
    spec: TaskSpec
    demo: Trajectory
    plan: DeviationPlan
    traj: Trajectory
    events: EventLog
    level: int
    seed: int


def video_seed(base_seed: int, video_id: str) -> int:
    return (zlib.crc32(video_id.encode()) ^ (base_seed * 0x9E3779B1)) & 0x7FFFFFFF


def _span_of(demo: Trajectory, q: int) -> tuple[int, int]:
    for _, start, end in demo.subtask_spans:
        if start <= q <= end:
            return start, end
    return 0, len(demo.steps) - 1


def _recoverable_branch(demo: Trajectory, rng, cfg: GenConfig, lo: int, hi: int) -> Branch | None:
    """A small recovering deviation whose branch point and target lie in [lo, hi]
    and inside one subtask span."""
    if hi - lo < 4:
        return None
    q = int(rng.integers(lo, hi - 2))
    s_start, s_end = _span_of(demo, q)
    top = min(hi, s_end)
    if top - q < 2:
        return None
    h = int(rng.integers(1, min(top - q, 15) + 1))
    return Branch(
        q=q,
        w=int(rng.integers(2, 12)),
        magnitude=float(rng.uniform(0.3, 1.0) * cfg.a_max),
        h=h,
        n_interp=int(rng.integers(2, 10)),
    )


def plan_for_level(demo: Trajectory, demo_log: EventLog, spec: TaskSpec, level: int, rng, cfg: GenConfig) -> DeviationPlan:
    top = n_levels(spec.task_group)
    horizon = len(demo.steps)
    seed = int(rng.integers(0, 2**31 - 1))
    if level == top:
        branches = []
        if rng.uniform() < 0.5:
            lo = 0
            for _ in range(int(rng.integers(1, 3))):
                b = _recoverable_branch(demo, rng, cfg, lo, horizon - 2)
                if b is None:
                    break
                branches.append(b)
                lo = b.q + b.h + 1
        return DeviationPlan(tuple(branches), seed)

    times = milestone_times(demo_log, spec)
    done = [t for t in times[: level - 1]]
    lo = 0 if level == 1 else done[-1]
    nxt = times[level - 1]
    hi = (nxt - 1) if nxt is not None else horizon - 1
    if hi < lo:
        raise GenerationError(f"{spec.id}: no branch point leaves exactly {level - 1} milestones")
    q = int(rng.integers(lo, hi + 1))
    branches = []
    if q > 8 and rng.uniform() < 0.3:
        early = _recoverable_branch(demo, rng, cfg, 0, q - 2)
        if early is not None and early.q + early.h < q:
            branches.append(early)
    branches.append(
        Branch(
            q=q,
            w=int(rng.integers(10, 60)),
            magnitude=float(rng.uniform(0.5, 1.0) * cfg.a_max),
            h=TERMINATE,
            gripper_flip_prob=0.03,
        )
    )
    return DeviationPlan(tuple(branches), seed)


def generate_video(
    spec: TaskSpec,
    level: int,
    video_id: str,
    seed: int,
    cfg: GenConfig = DEFAULT_CONFIG,
    max_attempts: int = 200,
) -> Video:
    """Synthesize one video whose assigned level equals ``level`` (rejection sampling)."""
    demo = synth_expert_demo(spec, seed, cfg)
    demo_log = detect_events(demo, spec, cfg)
    if level_from_log(demo_log, spec) != n_levels(spec.task_group):
        raise GenerationError(f"{spec.id}: expert demo does not reach the top level")
    rng = stream(seed, video_id, "plan")
    for _ in range(max_attempts):
        plan = plan_for_level(demo, demo_log, spec, level, rng, cfg)
        traj, log = assemble_nonexpert(demo, plan, spec, cfg)
        if len(traj.steps) >= 2 and level_from_log(log, spec) == level:
            return Video(video_id, spec, demo, plan, traj, log, level, seed)
    raise GenerationError(f"{video_id}: could not hit level {level} in {max_attempts} attempts")


def default_counts(spec: TaskSpec) -> dict[int, int]:
    per = LEVEL_COUNTS[spec.task_group]
    return {lv: per for lv in range(1, n_levels(spec.task_group) + 1)}


def video_ids(spec: TaskSpec, counts: dict[int, int] | None = None) -> list[tuple[str, int]]:
    counts = counts or default_counts(spec)
    out = []
    for lv in sorted(counts):
        for k in range(counts[lv]):
            out.append((f"{spec.id}-L{lv}-{k}", lv))
    return out
