"""Dense ground-truth progress values for trajectories.

Per subtask: goal-focused distance y (blend of contact distance and
object-to-goal distance), plus distance u to the next downstream expert
keypoint; d = y + u is inverted and rescaled to [0, 1]. Subtask series are
chained by offsetting each with the previous final value and rescaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError
from .trajgen.kinematics import contact_distance, dist
from .trajgen.types import EnvState, Step, SubtaskSpec, TaskSpec, Trajectory


@dataclass
class DistanceSeries:
    y_re: list[float] = field(default_factory=list)
    y_ef: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    u: list[float] = field(default_factory=list)
    d: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class KeypointSet:
    indices: tuple[int, ...]
    states: tuple[EnvState, ...]


@dataclass
class ValueSeries:
    v: list[float]
    boundaries: list[tuple[str, int, int]] = field(default_factory=list)
    degenerate: bool = False


def goal_distance(state: EnvState, sub: SubtaskSpec) -> tuple[float, float, float]:
    """(y_re, y_ef, y) for one state under one subtask."""
    if len(sub.object_contact_points) != len(state.contact_points):
        raise SchemaError(
            f"subtask {sub.id} has {len(sub.object_contact_points)} contact points, state has {len(state.contact_points)}"
        )
    y_re = contact_distance(state, sub.target_entity, sub.object_contact_points)
    y_ef = dist(state.entity_positions[sub.target_entity], sub.goal_position)
    return y_re, y_ef, (1.0 - sub.beta) * y_re + sub.beta * y_ef


def local_maxima(y: list[float]) -> list[int]:
    """Interior indices with y[t-1] < y[t] >= y[t+1]; a plateau reports its first index."""
    return [t for t in range(1, len(y) - 1) if y[t - 1] < y[t] >= y[t + 1]]


def _span(traj: Trajectory, sub: SubtaskSpec) -> tuple[int, int]:
    for sid, start, end in traj.subtask_spans:
        if sid == sub.id:
            return start, end
    return 0, len(traj.steps) - 1


def extract_keypoints(expert: Trajectory, sub: SubtaskSpec) -> KeypointSet:
    """Local maxima of the expert's y within the subtask span, plus the span's
    final state as a terminal anchor."""
    start, end = _span(expert, sub)
    for s in expert.steps[start : end + 1]:
        if s.provenance.kind != "expert":
            raise SchemaError("keypoints must come from an all-expert span")
    y = [goal_distance(s.state, sub)[2] for s in expert.steps[start : end + 1]]
    idx = [start + t for t in local_maxima(y)] if len(y) >= 3 else []
    idx.append(end)
    return KeypointSet(tuple(idx), tuple(expert.steps[i].state for i in idx))


def flat_distance(a: EnvState, b: EnvState) -> float:
    if set(a.entity_positions) != set(b.entity_positions) or len(a.contact_points) != len(b.contact_points):
        raise SchemaError("states are not comparable: entity sets or contact counts differ")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.flat(), b.flat())))


def next_keypoint(anchor: int, kset: KeypointSet) -> int:
    """Position in kset of the first keypoint strictly after ``anchor``; the
    terminal anchor when none is."""
    for i, k in enumerate(kset.indices):
        if k > anchor:
            return i
    return len(kset.indices) - 1


def keypoint_distance(step: Step, kset: KeypointSet) -> float:
    """Distance from the step's state to the next downstream expert keypoint.

    Deviation and recovery steps use their branching index q as anchor.
    """
    i = next_keypoint(step.provenance.q, kset)
    return flat_distance(step.state, kset.states[i])


def subtask_values(d: list[float]) -> tuple[list[float], bool]:
    """Invert and rescale distances; constant input gives zeros and the degenerate flag."""
    hi, lo = max(d), min(d)
    if hi == lo:
        return [0.0] * len(d), True
    return [(-x + hi) / (-lo + hi) for x in d], False


def chain_values(per_subtask: list[list[float]], ids: list[str] | None = None) -> ValueSeries:
    if not per_subtask:
        raise SchemaError("chain_values needs at least one series")
    ids = ids or [str(k) for k in range(len(per_subtask))]
    raw: list[float] = []
    bounds = []
    offset = 0.0
    for sid, series in zip(ids, per_subtask):
        start = len(raw)
        raw.extend(x + offset for x in series)
        if series:
            offset = raw[-1]
            bounds.append((sid, start, len(raw) - 1))
    hi, lo = max(raw), min(raw)
    if hi == lo:
        return ValueSeries([0.0] * len(raw), bounds, True)
    return ValueSeries([(x - lo) / (hi - lo) for x in raw], bounds, False)


@dataclass
class Labels:
    """Per-step labels for one trajectory."""

    distances: DistanceSeries
    subtask_ids: list[str]
    local_v: list[float]
    values: ValueSeries
    keypoints: dict[str, tuple[int, ...]]
    betas: dict[str, float]
    degenerate_subtasks: list[str]

    def to_records(self) -> list[dict]:
        ds = self.distances
        return [
            {
                "t": t,
                "y_re": ds.y_re[t],
                "y_ef": ds.y_ef[t],
                "y": ds.y[t],
                "u": ds.u[t],
                "d": ds.d[t],
                "v": self.values.v[t],
                "v_subtask": self.local_v[t],
                "subtask_id": self.subtask_ids[t],
            }
            for t in range(len(self.subtask_ids))
        ]

    def header(self) -> dict:
        return {
            "type": "header",
            "betas": self.betas,
            "keypoints": {k: list(v) for k, v in self.keypoints.items()},
            "degenerate_flag": self.values.degenerate,
            "degenerate_subtasks": self.degenerate_subtasks,
            "boundaries": [list(b) for b in self.values.boundaries],
        }


def label_trajectory(traj: Trajectory, demo: Trajectory, spec: TaskSpec) -> Labels:
    """Label every step of ``traj`` (derived from expert ``demo``)."""
    ksets = {sub.id: extract_keypoints(demo, sub) for sub in spec.subtasks}
    sub_idx = traj.subtask_indices()
    ds = DistanceSeries()
    for step, k in zip(traj.steps, sub_idx):
        sub = spec.subtasks[k]
        y_re, y_ef, y = goal_distance(step.state, sub)
        u = keypoint_distance(step, ksets[sub.id])
        ds.y_re.append(y_re)
        ds.y_ef.append(y_ef)
        ds.y.append(y)
        ds.u.append(u)
        ds.d.append(y + u)

    per_sub: list[list[float]] = []
    ids: list[str] = []
    local_v: list[float] = []
    degenerate = []
    for k, sub in enumerate(spec.subtasks):
        d_k = [ds.d[t] for t in range(len(sub_idx)) if sub_idx[t] == k]
        if not d_k:
            continue
        v_k, flag = subtask_values(d_k)
        if flag:
            degenerate.append(sub.id)
        per_sub.append(v_k)
        ids.append(sub.id)
        local_v.extend(v_k)
    values = chain_values(per_sub, ids)
    return Labels(
        distances=ds,
        subtask_ids=[spec.subtasks[k].id for k in sub_idx],
        local_v=local_v,
        values=values,
        keypoints={sid: ks.indices for sid, ks in ksets.items()},
        betas={s.id: s.beta for s in spec.subtasks},
        degenerate_subtasks=degenerate,
    )


def write_labels(path: Path, labels: Labels) -> None:
    lines = [json.dumps(labels.header(), sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in labels.to_records()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_label_records(path: Path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    return json.loads(lines[0]), [json.loads(x) for x in lines[1:]]
