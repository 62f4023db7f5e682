"""Trajectory, event-log and spec documents on disk.

Trajectory files are line-delimited JSON: a header record followed by one
record per step.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from ..errors import SchemaError
from .types import Action, DeviationPlan, EnvState, EventLog, Provenance, Step, TaskSpec, Trajectory

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

SUBTASK_SCHEMA = {
    "type": "object",
    "required": ["id", "kind", "target_entity", "object_contact_points", "goal_position", "beta", "end_predicate", "description"],
    "properties": {
        "id": {"type": "string"},
        "kind": {"enum": ["reach", "press", "grasp", "place", "pull", "turn"]},
        "target_entity": {"type": "string"},
        "object_contact_points": {"type": "array", "items": _VEC3, "minItems": 1},
        "goal_position": _VEC3,
        "beta": {"type": "number", "minimum": 0, "maximum": 1},
        "end_predicate": {
            "type": "object",
            "properties": {
                "max_contact_dist": {"type": ["number", "null"]},
                "max_goal_dist": {"type": ["number", "null"]},
                "gripper_closed": {"type": ["boolean", "null"]},
            },
        },
        "description": {"type": "string"},
    },
}

TASK_SCHEMA = {
    "type": "object",
    "required": ["id", "task_group", "description", "subtasks", "scene"],
    "properties": {
        "id": {"type": "string"},
        "task_group": {"type": "string"},
        "task_type": {"enum": ["atomic", "composite"]},
        "description": {"type": "string"},
        "frame_budget": {"enum": [30, 60]},
        "names": {"type": "object", "additionalProperties": {"type": "string"}},
        "scene": {
            "type": "object",
            "required": ["entity_positions", "contact_points"],
            "properties": {
                "entity_positions": {"type": "object", "additionalProperties": _VEC3, "minProperties": 1},
                "contact_points": {"type": "array", "items": _VEC3, "minItems": 1},
                "gripper_closed": {"type": "boolean"},
            },
        },
        "subtasks": {"type": "array", "items": SUBTASK_SCHEMA, "minItems": 1},
    },
}

PLAN_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer"},
        "branches": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["q", "w", "magnitude"],
                "properties": {
                    "q": {"type": "integer", "minimum": 0},
                    "w": {"type": "integer", "minimum": 0},
                    "magnitude": {"type": "number", "minimum": 0},
                    "h": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "terminate"}]},
                    "n_interp": {"type": "integer", "minimum": 1},
                    "nested": {"type": "boolean"},
                    "gripper_flip_prob": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


def _validate(doc, schema, what):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"invalid {what}: {exc.message}") from exc


def task_from_json(doc: dict) -> TaskSpec:
    _validate(doc, TASK_SCHEMA, "task spec")
    return TaskSpec.from_dict(doc)


def plan_from_json(doc: dict) -> DeviationPlan:
    _validate(doc, PLAN_SCHEMA, "deviation plan")
    return DeviationPlan.from_dict(doc)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def step_record(t: int, step: Step) -> dict:
    rec = {"t": t, "provenance": step.provenance.to_dict(), "action": step.action.to_dict()}
    rec.update(step.state.to_dict())
    return rec


def write_trajectory(path: Path, traj: Trajectory) -> None:
    lines = [
        dumps(
            {
                "type": "header",
                "task_id": traj.task_id,
                "seed": traj.seed,
                "subtask_spans": [list(s) for s in traj.subtask_spans],
            }
        )
    ]
    lines += [dumps(step_record(t, s)) for t, s in enumerate(traj.steps)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path: Path) -> Trajectory:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty trajectory file")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise SchemaError(f"{path}: first record must be the header")
    steps = []
    for line in lines[1:]:
        rec = json.loads(line)
        steps.append(
            Step(
                EnvState.from_dict(rec),
                Action.from_dict(rec["action"]),
                Provenance.from_dict(rec["provenance"]),
            )
        )
    spans = tuple((s[0], int(s[1]), int(s[2])) for s in header["subtask_spans"])
    return Trajectory(header["task_id"], int(header["seed"]), tuple(steps), spans)


def write_events(path: Path, log: EventLog) -> None:
    Path(path).write_text(json.dumps(log.to_list(), sort_keys=True, indent=1) + "\n")


def read_events(path: Path) -> EventLog:
    return EventLog.from_list(json.loads(Path(path).read_text()))
