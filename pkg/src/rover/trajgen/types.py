"""Domain types for synthetic manipulation trajectories.

States are stored as plain float tuples so trajectories serialize and compare
byte-for-byte; numeric kernels convert to arrays where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from ..errors import SchemaError

Vec3 = tuple[float, float, float]

TASK_GROUPS = (
    "pick_and_place",
    "open_close",
    "appliances",
    "toggle",
    "microwave_thawing",
    "restock_pantry",
    "arrange_vegetables",
    "prepare_coffee",
    "presoak_pan",
)

SUBTASK_KINDS = ("reach", "press", "grasp", "place", "pull", "turn")
# kinds whose completion displaces the target entity to goal_position
MOVE_KINDS = ("place", "pull", "turn")
GRIPPER_COMMANDS = ("open", "close", "hold")


def vec3(v) -> Vec3:
    x, y, z = (float(c) for c in v)
    return (x, y, z)


def _finite(v: Vec3) -> bool:
    return all(math.isfinite(c) for c in v)


@dataclass(frozen=True)
class EnvState:
    entity_positions: dict[str, Vec3]
    contact_points: tuple[Vec3, ...]
    gripper_closed: bool = False

    def __post_init__(self):
        if not self.entity_positions:
            raise SchemaError("EnvState needs at least one entity")
        if not self.contact_points:
            raise SchemaError("EnvState needs at least one gripper contact point")
        for p in list(self.entity_positions.values()) + list(self.contact_points):
            if len(p) != 3 or not _finite(p):
                raise SchemaError(f"non-finite or malformed coordinate {p!r}")

    @property
    def entity_ids(self) -> list[str]:
        return sorted(self.entity_positions)

    def flat(self) -> list[float]:
        """Entity positions in sorted id order, then contact points."""
        out: list[float] = []
        for eid in self.entity_ids:
            out.extend(self.entity_positions[eid])
        for p in self.contact_points:
            out.extend(p)
        return out

    def to_dict(self) -> dict:
        return {
            "entity_positions": {k: list(self.entity_positions[k]) for k in self.entity_ids},
            "contact_points": [list(p) for p in self.contact_points],
            "gripper_closed": self.gripper_closed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EnvState:
        return cls(
            entity_positions={k: vec3(v) for k, v in d["entity_positions"].items()},
            contact_points=tuple(vec3(p) for p in d["contact_points"]),
            gripper_closed=bool(d.get("gripper_closed", False)),
        )


@dataclass(frozen=True)
class Action:
    """Rigid translation of the gripper contact points plus a gripper command."""

    delta: Vec3 = (0.0, 0.0, 0.0)
    gripper_command: Literal["open", "close", "hold"] = "hold"

    def __post_init__(self):
        if self.gripper_command not in GRIPPER_COMMANDS:
            raise SchemaError(f"unknown gripper command {self.gripper_command!r}")

    def check_bounds(self, a_max: float) -> bool:
        return all(abs(c) <= a_max + 1e-12 for c in self.delta)

    def to_dict(self) -> dict:
        return {"delta": list(self.delta), "gripper_command": self.gripper_command}

    @classmethod
    def from_dict(cls, d: dict) -> Action:
        return cls(delta=vec3(d["delta"]), gripper_command=d["gripper_command"])


@dataclass(frozen=True)
class Provenance:
    """Where a step came from.

    ``q`` is always the expert anchor index: the expert timestep itself for
    expert steps, the branching index for deviation and recovery steps.
    """

    kind: Literal["expert", "deviation", "recovery"]
    q: int
    j: int = 0
    w: int = 0
    z: int = 0

    @classmethod
    def expert(cls, t: int) -> Provenance:
        return cls("expert", t)

    @classmethod
    def deviation(cls, q: int, j: int) -> Provenance:
        return cls("deviation", q, j=j)

    @classmethod
    def recovery(cls, q: int, w: int, z: int) -> Provenance:
        if z < 1:
            raise SchemaError("recovery index z starts at 1")
        return cls("recovery", q, w=w, z=z)

    @property
    def state_type(self) -> str:
        return {"expert": "expert", "deviation": "non-expert", "recovery": "interpolating"}[self.kind]

    def to_dict(self) -> dict:
        if self.kind == "expert":
            return {"kind": "expert", "t": self.q}
        if self.kind == "deviation":
            return {"kind": "deviation", "q": self.q, "j": self.j}
        return {"kind": "recovery", "q": self.q, "w": self.w, "z": self.z}

    @classmethod
    def from_dict(cls, d: dict) -> Provenance:
        if d["kind"] == "expert":
            return cls.expert(d["t"])
        if d["kind"] == "deviation":
            return cls.deviation(d["q"], d["j"])
        return cls.recovery(d["q"], d["w"], d["z"])


@dataclass(frozen=True)
class Step:
    """One timestep: the state reached and the action that produced it.

    The first step of a trajectory carries a zero ``hold`` action.
    """

    state: EnvState
    action: Action
    provenance: Provenance


@dataclass(frozen=True)
class EndPredicate:
    max_contact_dist: float | None = None
    max_goal_dist: float | None = None
    gripper_closed: bool | None = None

    def to_dict(self) -> dict:
        return {
            "max_contact_dist": self.max_contact_dist,
            "max_goal_dist": self.max_goal_dist,
            "gripper_closed": self.gripper_closed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EndPredicate:
        return cls(d.get("max_contact_dist"), d.get("max_goal_dist"), d.get("gripper_closed"))


@dataclass(frozen=True)
class SubtaskSpec:
    id: str
    kind: str
    target_entity: str
    object_contact_points: tuple[Vec3, ...]
    goal_position: Vec3
    beta: float
    end_predicate: EndPredicate
    description: str

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise SchemaError(f"subtask {self.id}: beta {self.beta} outside [0, 1]")
        if self.kind not in SUBTASK_KINDS:
            raise SchemaError(f"subtask {self.id}: unknown kind {self.kind!r}")
        if not self.object_contact_points:
            raise SchemaError(f"subtask {self.id}: no contact points")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "target_entity": self.target_entity,
            "object_contact_points": [list(p) for p in self.object_contact_points],
            "goal_position": list(self.goal_position),
            "beta": self.beta,
            "end_predicate": self.end_predicate.to_dict(),
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SubtaskSpec:
        return cls(
            id=d["id"],
            kind=d["kind"],
            target_entity=d["target_entity"],
            object_contact_points=tuple(vec3(p) for p in d["object_contact_points"]),
            goal_position=vec3(d["goal_position"]),
            beta=float(d["beta"]),
            end_predicate=EndPredicate.from_dict(d["end_predicate"]),
            description=d["description"],
        )


@dataclass(frozen=True)
class TaskSpec:
    id: str
    task_group: str
    description: str
    subtasks: tuple[SubtaskSpec, ...]
    scene: EnvState
    frame_budget: int = 30
    task_type: str = "atomic"
    # names substituted into QA templates, e.g. {"obj": "mug", "target_location": "the sink"}
    names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.task_group not in TASK_GROUPS:
            raise SchemaError(f"task {self.id}: unknown task group {self.task_group!r}")
        if not self.subtasks:
            raise SchemaError(f"task {self.id}: needs at least one subtask")
        if self.frame_budget not in (30, 60):
            raise SchemaError(f"task {self.id}: frame budget must be 30 or 60")
        c = len(self.scene.contact_points)
        for sub in self.subtasks:
            if len(sub.object_contact_points) != c:
                raise SchemaError(f"subtask {sub.id}: contact-point count differs from gripper's {c}")
            if sub.target_entity not in self.scene.entity_positions:
                raise SchemaError(f"subtask {sub.id}: unknown entity {sub.target_entity!r}")
        ids = [s.id for s in self.subtasks]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"task {self.id}: duplicate subtask ids")

    @property
    def M(self) -> int:
        return len(self.subtasks)

    def contact_offsets(self) -> dict[str, tuple[Vec3, ...]]:
        """Contact offsets per entity, taken from the first subtask that targets it."""
        out: dict[str, tuple[Vec3, ...]] = {}
        for sub in self.subtasks:
            out.setdefault(sub.target_entity, sub.object_contact_points)
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task_group": self.task_group,
            "task_type": self.task_type,
            "description": self.description,
            "frame_budget": self.frame_budget,
            "names": dict(sorted(self.names.items())),
            "scene": self.scene.to_dict(),
            "subtasks": [s.to_dict() for s in self.subtasks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> TaskSpec:
        return cls(
            id=d["id"],
            task_group=d["task_group"],
            description=d["description"],
            subtasks=tuple(SubtaskSpec.from_dict(s) for s in d["subtasks"]),
            scene=EnvState.from_dict(d["scene"]),
            frame_budget=int(d.get("frame_budget", 30)),
            task_type=d.get("task_type", "atomic"),
            names=dict(d.get("names", {})),
        )


TERMINATE = "terminate"


@dataclass(frozen=True)
class Branch:
    """One deviation. ``h`` is the recovery offset or ``TERMINATE``.

    A nested branch starts inside the recovery of an earlier branch; its
    branch point is that parent's recovery step ``z = q - q_parent``
    (clamped to the parent's ``n_interp``).
    """

    q: int
    w: int
    magnitude: float
    h: int | str = TERMINATE
    n_interp: int = 1
    nested: bool = False
    gripper_flip_prob: float = 0.0

    def __post_init__(self):
        if self.w < 0:
            raise SchemaError("deviation length w must be >= 0")
        if self.n_interp < 1:
            raise SchemaError("n_interp must be >= 1")
        if self.h != TERMINATE and (not isinstance(self.h, int) or self.h <= 0):
            raise SchemaError("recovery offset h must be a positive integer or 'terminate'")

    @property
    def terminates(self) -> bool:
        return self.h == TERMINATE

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "w": self.w,
            "magnitude": self.magnitude,
            "h": self.h,
            "n_interp": self.n_interp,
            "nested": self.nested,
            "gripper_flip_prob": self.gripper_flip_prob,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Branch:
        return cls(
            q=int(d["q"]),
            w=int(d["w"]),
            magnitude=float(d["magnitude"]),
            h=d.get("h", TERMINATE),
            n_interp=int(d.get("n_interp", 1)),
            nested=bool(d.get("nested", False)),
            gripper_flip_prob=float(d.get("gripper_flip_prob", 0.0)),
        )


@dataclass(frozen=True)
class DeviationPlan:
    branches: tuple[Branch, ...] = ()
    seed: int = 0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "branches": [b.to_dict() for b in self.branches]}

    @classmethod
    def from_dict(cls, d: dict) -> DeviationPlan:
        return cls(tuple(Branch.from_dict(b) for b in d.get("branches", [])), int(d.get("seed", 0)))


@dataclass(frozen=True)
class Event:
    kind: str
    entity: str
    timestep: int
    subtask: str | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "entity": self.entity, "timestep": self.timestep}
        if self.subtask is not None:
            d["subtask"] = self.subtask
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Event:
        return cls(d["kind"], d["entity"], int(d["timestep"]), d.get("subtask"))


@dataclass(frozen=True)
class EventLog:
    events: tuple[Event, ...] = ()

    def first(self, kind: str, entity: str | None = None) -> Event | None:
        for e in self.events:
            if e.kind == kind and (entity is None or e.entity == entity):
                return e
        return None

    def has(self, kind: str, entity: str | None = None) -> bool:
        return self.first(kind, entity) is not None

    def completed_subtasks(self) -> list[str]:
        return [e.subtask for e in self.events if e.kind == "subtask_complete"]

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.events]

    @classmethod
    def from_list(cls, items: list[dict]) -> EventLog:
        return cls(tuple(Event.from_dict(d) for d in items))


@dataclass(frozen=True)
class Trajectory:
    task_id: str
    seed: int
    steps: tuple[Step, ...]
    # (subtask id, first expert index, last expert index) of the source demo
    subtask_spans: tuple[tuple[str, int, int], ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def horizon(self) -> int:
        return len(self.steps)

    def states(self) -> list[EnvState]:
        return [s.state for s in self.steps]

    def subtask_index(self, step: Step) -> int:
        q = step.provenance.q
        for i, (_, start, end) in enumerate(self.subtask_spans):
            if start <= q <= end:
                return i
        return len(self.subtask_spans) - 1

    def subtask_indices(self) -> list[int]:
        return [self.subtask_index(s) for s in self.steps]

    def nonexpert_fraction(self) -> float:
        if not self.steps:
            return 0.0
        return sum(s.provenance.kind != "expert" for s in self.steps) / len(self.steps)
