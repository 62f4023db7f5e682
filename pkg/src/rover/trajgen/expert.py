"""Scripted expert demonstrations: straight-line segments under a per-step bound."""

from __future__ import annotations

import math

from ..errors import GenerationError
from .kinematics import (
    DEFAULT_CONFIG,
    GenConfig,
    add,
    contact_distance,
    end_predicate_holds,
    held_entity,
    object_contact_points,
    roll,
    sub,
)
from .types import Action, EnvState, Provenance, Step, SubtaskSpec, TaskSpec, Trajectory, Vec3
from .rng import stream


def _mean(points) -> Vec3:
    n = len(points)
    return (
        sum(p[0] for p in points) / n,
        sum(p[1] for p in points) / n,
        sum(p[2] for p in points) / n,
    )


def segment_actions(delta: Vec3, a_max: float) -> list[Action]:
    """Split a displacement into equal steps whose components stay within a_max."""
    biggest = max(abs(c) for c in delta)
    if biggest == 0.0:
        return []
    n = max(1, math.ceil(biggest / a_max - 1e-9))
    step = (delta[0] / n, delta[1] / n, delta[2] / n)
    return [Action(step, "hold") for _ in range(n)]


class _Builder:
    def __init__(self, spec: TaskSpec, start: EnvState, cfg: GenConfig):
        self.spec = spec
        self.cfg = cfg
        self.offsets = spec.contact_offsets()
        self.steps: list[Step] = [Step(start, Action(), Provenance.expert(0))]

    @property
    def state(self) -> EnvState:
        return self.steps[-1].state

    def act(self, action: Action) -> None:
        if len(self.steps) >= self.cfg.max_steps:
            raise GenerationError(f"task {self.spec.id}: exceeded max_steps={self.cfg.max_steps}")
        nxt = roll(self.state, action, self.offsets, self.cfg.eps_contact)
        self.steps.append(Step(nxt, action, Provenance.expert(len(self.steps))))

    def move_contacts_to(self, targets) -> None:
        delta = sub(_mean(targets), _mean(self.state.contact_points))
        for a in segment_actions(delta, self.cfg.a_max):
            self.act(a)

    def holding(self, entity: str) -> bool:
        return held_entity(self.state, self.offsets, self.cfg.eps_contact) == entity

    def acquire(self, sub_spec: SubtaskSpec, close: bool) -> None:
        if self.state.gripper_closed and not self.holding(sub_spec.target_entity):
            self.act(Action(gripper_command="open"))
        targets = object_contact_points(self.state, sub_spec.target_entity, sub_spec.object_contact_points)
        self.move_contacts_to(targets)
        if close and not self.state.gripper_closed:
            self.act(Action(gripper_command="close"))

    def run_subtask(self, sub_spec: SubtaskSpec) -> None:
        if sub_spec.kind in ("reach", "press"):
            self.move_contacts_to(
                object_contact_points(self.state, sub_spec.target_entity, sub_spec.object_contact_points)
            )
        elif sub_spec.kind == "grasp":
            if not self.holding(sub_spec.target_entity):
                self.acquire(sub_spec, close=True)
        else:
            if not self.holding(sub_spec.target_entity):
                self.acquire(sub_spec, close=True)
            pos = self.state.entity_positions[sub_spec.target_entity]
            for a in segment_actions(sub(sub_spec.goal_position, pos), self.cfg.a_max):
                self.act(a)
            self.act(Action(gripper_command="open"))


def synth_expert_demo(spec: TaskSpec, seed: int, cfg: GenConfig = DEFAULT_CONFIG, jitter: float = 0.03) -> Trajectory:
    """Build the expert demonstration for ``spec``.

    The seed only perturbs the gripper's start position (uniform, +-jitter per
    axis); everything else is scripted.
    """
    if cfg.a_max <= 0:
        raise GenerationError("a_max must be positive")
    scene = spec.scene
    if jitter > 0:
        rng = stream(seed, spec.id, "scene")
        off = tuple(float(c) for c in rng.uniform(-jitter, jitter, size=3))
        scene = EnvState(
            dict(scene.entity_positions),
            tuple(add(p, off) for p in scene.contact_points),
            scene.gripper_closed,
        )
    b = _Builder(spec, scene, cfg)
    spans: list[tuple[str, int, int]] = []
    for k, sub_spec in enumerate(spec.subtasks):
        start = 0 if k == 0 else len(b.steps)
        b.run_subtask(sub_spec)
        if len(b.steps) == start:
            b.act(Action())
        end = len(b.steps) - 1
        if not end_predicate_holds(b.state, sub_spec):
            d = contact_distance(b.state, sub_spec.target_entity, sub_spec.object_contact_points)
            raise GenerationError(
                f"task {spec.id}: subtask {sub_spec.id} not complete after scripted motion (contact dist {d:.4f})"
            )
        spans.append((sub_spec.id, start, end))
    return Trajectory(spec.id, seed, tuple(b.steps), tuple(spans))


def replay_gripper(traj: Trajectory, spec: TaskSpec, cfg: GenConfig = DEFAULT_CONFIG) -> list[tuple[Vec3, ...]]:
    """Contact points obtained by rolling each step forward with the next step's action."""
    offsets = spec.contact_offsets()
    out = [traj.steps[0].state.contact_points]
    for prev, nxt in zip(traj.steps, traj.steps[1:]):
        out.append(roll(prev.state, nxt.action, offsets, cfg.eps_contact).contact_points)
    return out

