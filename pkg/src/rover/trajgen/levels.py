"""Trajectory levels: how much of the task a video completes."""

from __future__ import annotations

from ..errors import SchemaError
from .events import detect_events
from .kinematics import DEFAULT_CONFIG, GenConfig
from .types import EventLog, TaskSpec, Trajectory

# Milestones per task group, in level order. ("event", kind) refers to the
# main entity (target of the first subtask); ("subtask", k) to completion of
# the k-th subtask.
MILESTONES: dict[str, tuple[tuple[str, object], ...]] = {
    "pick_and_place": (
        ("event", "approach"),
        ("event", "contact"),
        ("event", "grasp"),
        ("event", "start_move"),
        ("event", "near_goal"),
        ("event", "place"),
    ),
    "open_close": (
        ("event", "approach"),
        ("event", "contact"),
        ("event", "start_move"),
        ("event", "place"),
    ),
    "appliances": (("event", "approach"), ("event", "press")),
    "toggle": (
        ("event", "approach"),
        ("event", "contact"),
        ("event", "start_move"),
        ("event", "place"),
    ),
    "microwave_thawing": (("subtask", 0), ("subtask", 2), ("subtask", 3), ("subtask", 4)),
    "restock_pantry": (("subtask", 1), ("subtask", 3)),
    "arrange_vegetables": (("subtask", 1), ("subtask", 3)),
    "prepare_coffee": (("subtask", 1), ("subtask", 2)),
    "presoak_pan": (("subtask", 1), ("subtask", 3), ("subtask", 4)),
}

LEVEL_LABELS: dict[str, tuple[str, ...]] = {
    "pick_and_place": (
        "Fail to approach {obj}",
        "Approach {obj}",
        "Contact {obj}",
        "Pick up {obj}",
        "Keep grasp of {obj}",
        "Approach placing {obj} in {target_location}",
        "Place {obj} in {target_location}",
    ),
    "open_close": (
        "Fail to approach the door/drawer",
        "Approach door/drawer",
        "Contact door/drawer",
        "Start opening/closing door/drawer",
        "Finish opening/closing door/drawer",
    ),
    "appliances": (
        "Fail to approach the on/off button/lever",
        "Approach the on/off button/lever",
        "Successfully adjust the on/off button/lever",
    ),
    "toggle": (
        "Fail to approach the lever/knob",
        "Approach lever/knob",
        "Contact lever/knob",
        "Start turning/twisting lever/knob",
        "Finish turning/twisting lever/knob",
    ),
    "microwave_thawing": (
        "Fail to open microwave door",
        "Open microwave door",
        "Pick up the food item and place it in the microwave",
        "Close the microwave door",
        "Press the microwave start button",
    ),
    "restock_pantry": (
        "Fail to pick up the first item",
        "Pick up the first item and place it in the pantry",
        "Pick up the second item and place it in the pantry",
    ),
    "arrange_vegetables": (
        "Fail to pick up the first vegetable",
        "Pick up the first vegetable and place it on the cutting board",
        "Pick up the second vegetable and place it on the cutting board",
    ),
    "prepare_coffee": (
        "Fail to pick up the mug",
        "Pick up the mug and place it in the coffee machine",
        "Press the start button on the coffee machine",
    ),
    "presoak_pan": (
        "Fail to pick up the pan",
        "Pick up the pan and place it in the sink",
        "Pick up the sponge and place it in the pan",
        "Turn the sink handle to turn on the sink",
    ),
}

# videos per level per task
LEVEL_COUNTS: dict[str, int] = {
    "pick_and_place": 3,
    "open_close": 4,
    "appliances": 6,
    "toggle": 4,
    "microwave_thawing": 4,
    "restock_pantry": 7,
    "arrange_vegetables": 7,
    "prepare_coffee": 7,
    "presoak_pan": 5,
}


def n_levels(task_group: str) -> int:
    if task_group not in MILESTONES:
        raise SchemaError(f"unknown task group {task_group!r}")
    return len(MILESTONES[task_group]) + 1


def milestone_times(log: EventLog, spec: TaskSpec) -> list[int | None]:
    """Timestep at which each milestone is first achieved (None if never)."""
    if spec.task_group not in MILESTONES:
        raise SchemaError(f"unknown task group {spec.task_group!r}")
    main = spec.subtasks[0].target_entity
    out: list[int | None] = []
    for kind, ref in MILESTONES[spec.task_group]:
        if kind == "event":
            ev = log.first(ref, main)
        else:
            sid = spec.subtasks[ref].id
            ev = next((e for e in log.events if e.kind == "subtask_complete" and e.subtask == sid), None)
        out.append(None if ev is None else ev.timestep)
    return out


def level_from_log(log: EventLog, spec: TaskSpec, upto: int | None = None) -> int:
    """1 + number of leading milestones achieved (optionally by timestep ``upto``)."""
    level = 1
    for t in milestone_times(log, spec):
        if t is None or (upto is not None and t > upto):
            break
        level += 1
    return level


def assign_level(traj: Trajectory, spec: TaskSpec, log: EventLog | None = None, cfg: GenConfig = DEFAULT_CONFIG) -> int:
    if spec.task_group not in MILESTONES:
        raise SchemaError(f"unknown task group {spec.task_group!r}")
    if log is None:
        log = detect_events(traj, spec, cfg)
    return level_from_log(log, spec)
