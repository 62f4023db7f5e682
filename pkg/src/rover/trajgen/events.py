"""Ground-truth event detection from trajectory states."""

from __future__ import annotations

from .kinematics import DEFAULT_CONFIG, GenConfig, contact_distance, dist, end_predicate_holds
from .types import MOVE_KINDS, Event, EventLog, TaskSpec, Trajectory

# order of kinds when several fire on the same timestep
KIND_ORDER = (
    "approach",
    "contact",
    "grasp",
    "press",
    "start_move",
    "near_goal",
    "place",
    "drop",
    "subtask_complete",
)


def move_goals(spec: TaskSpec) -> dict:
    """Goal of the first displacing subtask for each entity."""
    out = {}
    for sub in spec.subtasks:
        if sub.kind in MOVE_KINDS:
            out.setdefault(sub.target_entity, sub.goal_position)
    return out


def detect_events(traj: Trajectory, spec: TaskSpec, cfg: GenConfig = DEFAULT_CONFIG) -> EventLog:
    offsets = spec.contact_offsets()
    goals = move_goals(spec)
    pressable = {s.target_entity for s in spec.subtasks if s.kind == "press"}
    entities = sorted(offsets)
    if not traj.steps:
        return EventLog()
    origin = traj.steps[0].state.entity_positions

    seen: set[tuple[str, str]] = set()
    events: list[Event] = []
    placed: set[str] = set()
    was_grasped: dict[str, bool] = {e: False for e in entities}
    next_sub = 0

    def fire(kind, entity, t, subtask=None):
        if (kind, entity if subtask is None else subtask) in seen:
            return
        seen.add((kind, entity if subtask is None else subtask))
        events.append(Event(kind, entity, t, subtask))

    for t, step in enumerate(traj.steps):
        s = step.state
        fired: list[tuple[str, str, str | None]] = []
        for e in entities:
            y_re = contact_distance(s, e, offsets[e])
            contact = y_re < cfg.eps_contact
            grasped = contact and s.gripper_closed
            if y_re < cfg.eps_approach:
                fired.append(("approach", e, None))
            if contact:
                fired.append(("contact", e, None))
                if e in pressable:
                    fired.append(("press", e, None))
            if grasped:
                fired.append(("grasp", e, None))
            if dist(s.entity_positions[e], origin[e]) > cfg.eps_move:
                fired.append(("start_move", e, None))
            if e in goals:
                g = dist(s.entity_positions[e], goals[e])
                if g < cfg.eps_near:
                    fired.append(("near_goal", e, None))
                if g < cfg.eps_place:
                    fired.append(("place", e, None))
                    placed.add(e)
            if was_grasped[e] and not grasped and e not in placed:
                fired.append(("drop", e, None))
            was_grasped[e] = grasped
        if next_sub < len(spec.subtasks) and end_predicate_holds(s, spec.subtasks[next_sub]):
            sub = spec.subtasks[next_sub]
            fired.append(("subtask_complete", sub.target_entity, sub.id))
            next_sub += 1
        fired.sort(key=lambda f: KIND_ORDER.index(f[0]))
        for kind, e, sid in fired:
            fire(kind, e, t, sid)
    return EventLog(tuple(events))
