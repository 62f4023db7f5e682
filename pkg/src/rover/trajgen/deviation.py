"""Non-expert trajectories: random deviations from expert states and interpolated recovery."""

from __future__ import annotations

import numpy as np

from ..errors import PlanError, SchemaError
from .events import detect_events
from .kinematics import DEFAULT_CONFIG, GenConfig, roll, sub
from .rng import stream
from .types import (
    Action,
    Branch,
    DeviationPlan,
    EnvState,
    EventLog,
    Provenance,
    Step,
    TaskSpec,
    Trajectory,
)


def sample_action(rng: np.random.Generator, magnitude: float, a_max: float, closed: bool, flip_prob: float) -> Action:
    raw = rng.uniform(-magnitude, magnitude, size=3)
    delta = tuple(float(min(a_max, max(-a_max, c))) for c in raw)
    # always consume the flip draw so the stream layout does not depend on flip_prob
    flip = rng.uniform() < flip_prob
    command = ("open" if closed else "close") if flip else "hold"
    return Action(delta, command)


def deviate_from(
    state: EnvState,
    branch: Branch,
    rng: np.random.Generator,
    offsets: dict,
    cfg: GenConfig = DEFAULT_CONFIG,
) -> list[Step]:
    """``branch.w`` randomly actioned steps starting at ``state`` (= s_{q,0}).

    Step j holds the state reached by executing a_{q,j}, so the last step holds
    the final deviated state s_{q,w}.
    """
    steps: list[Step] = []
    cur = state
    for j in range(branch.w):
        a = sample_action(rng, branch.magnitude, cfg.a_max, cur.gripper_closed, branch.gripper_flip_prob)
        cur = roll(cur, a, offsets, cfg.eps_contact)
        steps.append(Step(cur, a, Provenance.deviation(branch.q, j)))
    return steps


def inject_deviation(
    traj: Trajectory,
    branch: Branch,
    rng: np.random.Generator,
    spec: TaskSpec,
    cfg: GenConfig = DEFAULT_CONFIG,
) -> list[Step]:
    """Deviation steps branching from ``traj.steps[branch.q]``."""
    if not 0 <= branch.q < len(traj.steps):
        raise IndexError(f"branch point q={branch.q} outside trajectory of length {len(traj.steps)}")
    return deviate_from(traj.steps[branch.q].state, branch, rng, spec.contact_offsets(), cfg)


def recover_interpolate(s_dev: EnvState, s_target: EnvState, n_interp: int) -> list[EnvState]:
    """Affine blend from the deviated state to the target for z = 1..n_interp."""
    if n_interp < 1:
        raise SchemaError("n_interp must be >= 1")
    if set(s_dev.entity_positions) != set(s_target.entity_positions):
        raise SchemaError("deviated and target states have different entity sets")
    if len(s_dev.contact_points) != len(s_target.contact_points):
        raise SchemaError("deviated and target states have different contact-point counts")

    def blend(a, b, alpha):
        return tuple((1.0 - alpha) * x + alpha * y for x, y in zip(a, b))

    out = []
    for z in range(1, n_interp + 1):
        alpha = z / n_interp
        positions = {k: blend(v, s_target.entity_positions[k], alpha) for k, v in s_dev.entity_positions.items()}
        cps = tuple(blend(a, b, alpha) for a, b in zip(s_dev.contact_points, s_target.contact_points))
        closed = s_target.gripper_closed if alpha > 0.5 else s_dev.gripper_closed
        out.append(EnvState(positions, cps, closed))
    return out


def _implied_action(prev: EnvState, nxt: EnvState) -> Action:
    delta = sub(nxt.contact_points[0], prev.contact_points[0])
    if nxt.gripper_closed == prev.gripper_closed:
        cmd = "hold"
    else:
        cmd = "close" if nxt.gripper_closed else "open"
    return Action(delta, cmd)


def _find(seq: list[Step], pred) -> int:
    for i, s in enumerate(seq):
        if pred(s.provenance):
            return i
    return -1


def assemble_nonexpert(
    demo: Trajectory,
    plan: DeviationPlan,
    spec: TaskSpec,
    cfg: GenConfig = DEFAULT_CONFIG,
) -> tuple[Trajectory, EventLog]:
    """Apply the plan's branches (in increasing q) to the expert demo.

    A recovering branch replaces expert steps q+1..q+h with its w deviation
    steps and n_interp recovery steps; a terminating branch truncates.
    """
    offsets = spec.contact_offsets()
    horizon = len(demo.steps)
    seq = list(demo.steps)
    applied: list[Branch] = []
    terminated = False
    order = sorted(range(len(plan.branches)), key=lambda i: (plan.branches[i].q, i))
    for i in order:
        b = plan.branches[i]
        if terminated:
            raise PlanError(f"branch at q={b.q} follows a terminating branch")
        if not 0 <= b.q < horizon:
            raise IndexError(f"branch point q={b.q} outside demo of length {horizon}")
        if b.nested:
            parents = [p for p in applied if not p.terminates and p.q < b.q <= p.q + p.h]
            if not parents:
                raise PlanError(f"nested branch at q={b.q} is not inside any recovered span")
            p = parents[-1]
            z = min(b.q - p.q, p.n_interp)
            pos = _find(seq, lambda pv: pv.kind == "recovery" and pv.q == p.q and pv.z == z)
        else:
            for p in applied:
                end = horizon if p.terminates else p.q + p.h
                if p.q <= b.q <= end:
                    raise PlanError(f"branch at q={b.q} overlaps branch at q={p.q}")
            pos = _find(seq, lambda pv: pv.kind == "expert" and pv.q == b.q)
        if pos < 0:
            raise PlanError(f"branch point q={b.q} not present in the perturbed sequence")

        dev = deviate_from(seq[pos].state, b, stream(plan.seed, demo.task_id, "branch", i), offsets, cfg)
        if b.terminates:
            seq = seq[: pos + 1] + dev
            terminated = True
        else:
            if b.q + b.h >= horizon:
                raise PlanError(f"recovery target q+h={b.q + b.h} beyond demo horizon {horizon}")
            target = demo.steps[b.q + b.h].state
            s_dev = dev[-1].state if dev else seq[pos].state
            rec: list[Step] = []
            prev = s_dev
            for z, st in enumerate(recover_interpolate(s_dev, target, b.n_interp), start=1):
                rec.append(Step(st, _implied_action(prev, st), Provenance.recovery(b.q, b.w, z)))
                prev = st
            suffix = [s for s in seq[pos + 1 :] if s.provenance.q > b.q + b.h]
            seq = seq[: pos + 1] + dev + rec + suffix
        applied.append(b)

    traj = Trajectory(demo.task_id, demo.seed, tuple(seq), demo.subtask_spans)
    return traj, detect_events(traj, spec, cfg)
