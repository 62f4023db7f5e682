"""Kinematic rollout: contact points translate, a grasped entity follows rigidly."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import SchemaError
from .types import Action, EnvState, SubtaskSpec, Vec3


@dataclass(frozen=True)
class GenConfig:
    a_max: float = 0.01
    eps_contact: float = 0.02
    eps_place: float = 0.05
    eps_approach: float = 0.1
    eps_near: float = 0.1
    eps_move: float = 0.02
    max_steps: int = 5000

    def to_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_CONFIG = GenConfig()


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def dist(a: Vec3, b: Vec3) -> float:
    return norm(sub(a, b))


def object_contact_points(state: EnvState, entity: str, offsets) -> list[Vec3]:
    base = state.entity_positions[entity]
    return [add(base, off) for off in offsets]


def contact_distance(state: EnvState, entity: str, offsets) -> float:
    """Sum of distances between paired gripper and object contact points."""
    if len(offsets) != len(state.contact_points):
        raise SchemaError(
            f"{len(offsets)} object contact points vs {len(state.contact_points)} gripper contact points"
        )
    targets = object_contact_points(state, entity, offsets)
    return sum(dist(r, l) for r, l in zip(state.contact_points, targets))


def goal_dist(state: EnvState, sub_spec: SubtaskSpec) -> float:
    return dist(state.entity_positions[sub_spec.target_entity], sub_spec.goal_position)


def held_entity(state: EnvState, offsets_by_entity: dict, eps_contact: float) -> str | None:
    """Entity rigidly attached to a closed gripper, if any (closest in contact)."""
    if not state.gripper_closed:
        return None
    best, best_d = None, eps_contact
    for eid in sorted(offsets_by_entity):
        d = contact_distance(state, eid, offsets_by_entity[eid])
        if d < best_d:
            best, best_d = eid, d
    return best


def roll(state: EnvState, action: Action, offsets_by_entity: dict, eps_contact: float) -> EnvState:
    """Apply one action. An entity held before the action moves with the gripper
    unless the command opens the gripper."""
    held = None
    if action.gripper_command != "open":
        held = held_entity(state, offsets_by_entity, eps_contact)
    positions = dict(state.entity_positions)
    if held is not None:
        positions[held] = add(positions[held], action.delta)
    cps = tuple(add(p, action.delta) for p in state.contact_points)
    if action.gripper_command == "close":
        closed = True
    elif action.gripper_command == "open":
        closed = False
    else:
        closed = state.gripper_closed
    return EnvState(positions, cps, closed)


def end_predicate_holds(state: EnvState, sub_spec: SubtaskSpec) -> bool:
    pred = sub_spec.end_predicate
    if pred.max_contact_dist is not None:
        if contact_distance(state, sub_spec.target_entity, sub_spec.object_contact_points) >= pred.max_contact_dist:
            return False
    if pred.max_goal_dist is not None and goal_dist(state, sub_spec) >= pred.max_goal_dist:
        return False
    if pred.gripper_closed is not None and state.gripper_closed != pred.gripper_closed:
        return False
    return True
