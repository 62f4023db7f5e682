"""Canonical ground-truth facts per sampled frame.

Facts are short ``kind:subject`` strings. State facts describe the gripper at
the frame (``gripper:open``, ``holding:mug``); event facts name events from
the event log (``grasp:mug``, ``complete:<subtask id>``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .trajgen.kinematics import DEFAULT_CONFIG, GenConfig, held_entity
from .trajgen.types import Event, EventLog, TaskSpec, Trajectory

FACT_RE = re.compile(r"\b([a-z_]+):([A-Za-z0-9_.\-]+)")


def event_fact(ev: Event) -> str:
    if ev.kind == "subtask_complete":
        return f"complete:{ev.subtask}"
    return f"{ev.kind}:{ev.entity}"


def state_facts(traj: Trajectory, spec: TaskSpec, t: int, cfg: GenConfig = DEFAULT_CONFIG) -> list[str]:
    s = traj.steps[t].state
    out = ["gripper:closed" if s.gripper_closed else "gripper:open"]
    held = held_entity(s, spec.contact_offsets(), cfg.eps_contact)
    if held is not None:
        out.append(f"holding:{held}")
    return out


@dataclass(frozen=True)
class FrameFacts:
    stated: tuple[str, ...]
    true_set: frozenset


def frame_facts(
    traj: Trajectory, spec: TaskSpec, log: EventLog, timesteps: list[int], cfg: GenConfig = DEFAULT_CONFIG
) -> list[FrameFacts]:
    """For each sampled timestep: the facts an ideal describer states (gripper
    state plus events since the previous sampled frame) and the set of facts
    that are true there (gripper state plus every event so far)."""
    out = []
    prev = -1
    for t in timesteps:
        st = state_facts(traj, spec, t, cfg)
        new = [event_fact(e) for e in log.events if prev < e.timestep <= t]
        so_far = {event_fact(e) for e in log.events if e.timestep <= t}
        out.append(FrameFacts(tuple(st + new), frozenset(st) | frozenset(so_far)))
        prev = t
    return out


def render_facts(facts) -> str:
    return "; ".join(facts)


def parse_facts(description: str) -> set[str]:
    return {f"{k}:{v}" for k, v in FACT_RE.findall(description or "")}
