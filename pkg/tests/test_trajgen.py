"""Trajectory synthesis: expert demos, deviations, recovery, events, levels, frames."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rover.errors import GenerationError, InputError, PlanError, SchemaError
from rover.trajgen import (
    TERMINATE,
    Action,
    Branch,
    DeviationPlan,
    EndPredicate,
    EnvState,
    GenConfig,
    Provenance,
    Step,
    SubtaskSpec,
    TaskSpec,
    Trajectory,
    assemble_nonexpert,
    assign_level,
    detect_events,
    downsample_frames,
    inject_deviation,
    n_levels,
    recover_interpolate,
    synth_expert_demo,
)
from rover.trajgen.dataset import Video, default_counts, generate_video, plan_for_level, video_ids
from rover.trajgen.io import (
    dumps,
    plan_from_json,
    read_events,
    read_trajectory,
    task_from_json,
    write_events,
    write_trajectory,
)
from rover.trajgen.kinematics import DEFAULT_CONFIG, contact_distance, dist, end_predicate_holds, roll
from rover.trajgen.levels import LEVEL_COUNTS, level_from_log
from rover.trajgen.rng import stream


def reach_spec(target=(0.9, 0.0, 0.0)):
    sub = SubtaskSpec("reach", "reach", "button", ((0.0, 0.0, 0.0),), target, 0.0, EndPredicate(0.02), "reach the button")
    scene = EnvState({"button": target}, ((0.0, 0.0, 0.0),), False)
    return TaskSpec("Reach", "appliances", "reach the button", (sub,), scene)


def pnp(catalog):
    return next(s for s in catalog if s.id == "PickPlaceCounterToSink")


# ---------------------------------------------------------------- types


def test_envstate_rejects_nonfinite():
    with pytest.raises(SchemaError):
        EnvState({"a": (0.0, math.nan, 0.0)}, ((0, 0, 0),))
    with pytest.raises(SchemaError):
        EnvState({}, ((0, 0, 0),))


def test_flat_orders_entities_then_contacts():
    s = EnvState({"b": (1, 1, 1), "a": (2, 2, 2)}, ((3, 3, 3),))
    assert s.flat() == [2, 2, 2, 1, 1, 1, 3, 3, 3]


def test_taskspec_validation():
    spec = reach_spec()
    with pytest.raises(SchemaError):
        TaskSpec("x", "not_a_group", "d", spec.subtasks, spec.scene)
    with pytest.raises(SchemaError):
        TaskSpec("x", "appliances", "d", spec.subtasks, spec.scene, frame_budget=45)
    with pytest.raises(SchemaError):
        SubtaskSpec("s", "reach", "button", ((0, 0, 0),), (0, 0, 0), 1.5, EndPredicate(), "d")


def test_recovery_provenance_needs_positive_z():
    with pytest.raises(SchemaError):
        Provenance.recovery(3, 2, 0)


# ---------------------------------------------------------------- expert demos


def test_reach_straight_line_nine_actions():
    cfg = GenConfig(a_max=0.1)
    demo = synth_expert_demo(reach_spec(), seed=0, cfg=cfg, jitter=0.0)
    # nine motion steps after the initial state
    assert demo.horizon == 10
    assert all(s.provenance.kind == "expert" for s in demo.steps)
    final = demo.steps[-1].state
    assert contact_distance(final, "button", ((0.0, 0.0, 0.0),)) == pytest.approx(0.0, abs=1e-12)


def test_expert_demo_deterministic(catalog):
    for spec in catalog[:5]:
        a = synth_expert_demo(spec, 7)
        b = synth_expert_demo(spec, 7)
        assert [dumps(s.state.to_dict()) for s in a.steps] == [dumps(s.state.to_dict()) for s in b.steps]


def test_expert_end_predicates_hold(catalog):
    for spec in catalog:
        demo = synth_expert_demo(spec, 0)
        for (sid, start, end), sub in zip(demo.subtask_spans, spec.subtasks):
            assert sid == sub.id
            assert end_predicate_holds(demo.steps[end].state, sub)


def test_pick_and_place_has_two_subtask_completions(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    log = detect_events(demo, spec)
    done = [e for e in log.events if e.kind == "subtask_complete"]
    assert [e.subtask for e in done] == [s.id for s in spec.subtasks]
    # brute force: first timestep where each predicate holds, in order
    t0 = 0
    for sub, ev in zip(spec.subtasks, done):
        first = next(t for t in range(t0, demo.horizon) if end_predicate_holds(demo.steps[t].state, sub))
        assert ev.timestep == first
        t0 = first + 1


def test_unreachable_goal_raises():
    spec = reach_spec(target=(500.0, 0.0, 0.0))
    with pytest.raises(GenerationError):
        synth_expert_demo(spec, 0, GenConfig(a_max=0.01, max_steps=100))


def test_expert_actions_within_bounds(catalog):
    for spec in catalog:
        demo = synth_expert_demo(spec, 3)
        assert all(s.action.check_bounds(DEFAULT_CONFIG.a_max) for s in demo.steps)


def _replay_ok(traj, spec, kinds=("expert", "deviation")):
    offsets = spec.contact_offsets()
    for prev, nxt in zip(traj.steps, traj.steps[1:]):
        if nxt.provenance.kind not in kinds:
            continue
        rolled = roll(prev.state, nxt.action, offsets, DEFAULT_CONFIG.eps_contact)
        for a, b in zip(rolled.contact_points, nxt.state.contact_points):
            assert a == pytest.approx(b, abs=1e-12)


def test_replay_soundness_expert(catalog):
    for spec in catalog:
        _replay_ok(synth_expert_demo(spec, 1), spec)


# ---------------------------------------------------------------- deviation and recovery


def test_inject_zero_length():
    spec = reach_spec()
    demo = synth_expert_demo(spec, 0, GenConfig(a_max=0.1), jitter=0.0)
    assert inject_deviation(demo, Branch(q=2, w=0, magnitude=0.1), stream(0), spec) == []


def test_inject_indices_and_replay():
    spec = reach_spec()
    cfg = GenConfig(a_max=0.25)
    demo = synth_expert_demo(spec, 0, cfg, jitter=0.0)
    steps = inject_deviation(demo, Branch(q=1, w=5, magnitude=0.2), stream(11, "dev"), spec, cfg)
    assert [s.provenance.j for s in steps] == [0, 1, 2, 3, 4]
    assert all(s.provenance.q == 1 for s in steps)
    # independent replay: redraw the same actions and accumulate the translation
    rng = stream(11, "dev")
    pos = np.array(demo.steps[1].state.contact_points[0])
    for _ in range(5):
        delta = np.clip(rng.uniform(-0.2, 0.2, size=3), -0.25, 0.25)
        rng.uniform()
        pos = pos + delta
    assert np.allclose(steps[-1].state.contact_points[0], pos, atol=1e-12)


def test_inject_out_of_range():
    spec = reach_spec()
    demo = synth_expert_demo(spec, 0, GenConfig(a_max=0.1), jitter=0.0)
    with pytest.raises(IndexError):
        inject_deviation(demo, Branch(q=99, w=1, magnitude=0.1), stream(0), spec)


def test_recover_interpolate_examples():
    a = EnvState({"e": (0.0, 0.0, 0.0)}, ((0.0, 0.0, 0.0),))
    b = EnvState({"e": (1.0, 0.0, 0.0)}, ((1.0, 0.0, 0.0),), True)
    out = recover_interpolate(a, b, 2)
    assert [s.contact_points[0] for s in out] == [(0.5, 0.0, 0.0), (1.0, 0.0, 0.0)]
    # alpha = 0.5 keeps the source flag; alpha = 1 takes the target's
    assert [s.gripper_closed for s in out] == [False, True]
    one = recover_interpolate(a, b, 1)
    assert one == [b]


def test_recover_interpolate_mismatch():
    a = EnvState({"e": (0.0, 0.0, 0.0)}, ((0.0, 0.0, 0.0),))
    b = EnvState({"f": (1.0, 0.0, 0.0)}, ((1.0, 0.0, 0.0),))
    with pytest.raises(SchemaError):
        recover_interpolate(a, b, 3)


coord = st.floats(-2, 2, allow_nan=False)
vec = st.tuples(coord, coord, coord)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, vec, st.integers(1, 10))
def test_recovery_endpoint_and_affinity(e0, e1, c0, c1, n):
    a = EnvState({"e": e0}, (c0,))
    b = EnvState({"e": e1}, (c1,))
    out = recover_interpolate(a, b, n)
    assert len(out) == n
    assert np.allclose(out[-1].flat(), b.flat(), atol=1e-9, rtol=0)
    va, vb = np.array(a.flat()), np.array(b.flat())
    for z, s in enumerate(out, start=1):
        assert np.allclose(np.array(s.flat()), va + (z / n) * (vb - va), atol=1e-9)


def test_empty_plan_is_identity(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    traj, log = assemble_nonexpert(demo, DeviationPlan(), spec)
    assert traj.steps == demo.steps
    assert log.to_list() == detect_events(demo, spec).to_list()


def test_terminate_mid_first_subtask_has_no_completion(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    _, start, end = demo.subtask_spans[0]
    q = (start + end) // 2
    traj, log = assemble_nonexpert(demo, DeviationPlan((Branch(q, 5, 0.005),), seed=1), spec)
    # brute force over the assembled states: the first end predicate never holds
    assert not any(end_predicate_holds(s.state, spec.subtasks[0]) for s in traj.steps[: q + 1])
    assert [e for e in log.events if e.kind == "subtask_complete"] == []


def test_recovering_branch_length(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    traj, _ = assemble_nonexpert(demo, DeviationPlan((Branch(10, 3, 0.01, h=2, n_interp=4),), seed=2), spec)
    assert traj.horizon == demo.horizon + 3 + 4 - 2
    kinds = [s.provenance.kind for s in traj.steps]
    assert kinds[11:14] == ["deviation"] * 3
    assert kinds[14:18] == ["recovery"] * 4
    assert traj.steps[18].provenance == Provenance.expert(13)
    # interpolation endpoint equals the expert target
    assert np.allclose(traj.steps[17].state.flat(), demo.steps[12].state.flat(), atol=1e-9)
    _replay_ok(traj, spec)


def test_overlapping_branches_rejected(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    plan = DeviationPlan((Branch(10, 2, 0.01, h=5), Branch(12, 2, 0.01, h=3)))
    with pytest.raises(PlanError):
        assemble_nonexpert(demo, plan, spec)


def test_nested_branch_applies_on_perturbed_sequence(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    plan = DeviationPlan((Branch(10, 2, 0.01, h=6, n_interp=4), Branch(12, 2, 0.01, h=3, n_interp=2, nested=True)))
    traj, _ = assemble_nonexpert(demo, plan, spec)
    nested = [s for s in traj.steps if s.provenance.q == 12]
    assert [s.provenance.kind for s in nested] == ["deviation", "deviation", "recovery", "recovery"]
    assert traj.steps[-1].state == demo.steps[-1].state


def test_assembly_deterministic(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    plan = DeviationPlan((Branch(10, 8, 0.01, h=4, n_interp=3),), seed=5)
    a, _ = assemble_nonexpert(demo, plan, spec)
    b, _ = assemble_nonexpert(demo, plan, spec)
    assert [dumps(s.state.to_dict()) for s in a.steps] == [dumps(s.state.to_dict()) for s in b.steps]


# ---------------------------------------------------------------- events


def test_grasp_before_place(catalog):
    spec = pnp(catalog)
    log = detect_events(synth_expert_demo(spec, 0), spec)
    ent = spec.subtasks[0].target_entity
    assert log.first("grasp", ent).timestep < log.first("place", ent).timestep


def test_truncated_before_contact_has_no_events(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    short = Trajectory(demo.task_id, demo.seed, demo.steps[:3], demo.subtask_spans)
    log = detect_events(short, spec)
    assert [e for e in log.events if e.entity == spec.subtasks[0].target_entity] == []


def test_drop_when_gripper_opens_mid_transport():
    obj = ((0.0, 0.0, 0.0),)
    grasp = SubtaskSpec("g", "grasp", "box", obj, (0, 0, 0), 0.0, EndPredicate(0.02, None, True), "grasp the box")
    place = SubtaskSpec("p", "place", "box", obj, (1.0, 0, 0), 0.5, EndPredicate(None, 0.05, False), "place the box")
    spec = TaskSpec("T", "pick_and_place", "move the box", (grasp, place), EnvState({"box": (0, 0, 0)}, ((0, 0, 0.1),)))
    hold = Action((0, 0, 0), "hold")
    states = [
        EnvState({"box": (0, 0, 0)}, ((0, 0, 0.1),), False),
        EnvState({"box": (0, 0, 0)}, ((0, 0, 0.0),), False),
        EnvState({"box": (0, 0, 0)}, ((0, 0, 0.0),), True),
        EnvState({"box": (0.1, 0, 0)}, ((0.1, 0, 0.0),), True),
        EnvState({"box": (0.2, 0, 0)}, ((0.2, 0, 0.0),), False),
        EnvState({"box": (0.2, 0, 0)}, ((0.3, 0, 0.0),), False),
    ]
    steps = tuple(Step(s, hold, Provenance.expert(t)) for t, s in enumerate(states))
    traj = Trajectory("T", 0, steps, (("g", 0, 2), ("p", 3, 5)))
    log = detect_events(traj, spec)
    assert log.first("grasp", "box").timestep == 2
    assert log.first("drop", "box").timestep == 4
    assert not log.has("place", "box")


# ---------------------------------------------------------------- levels


def test_expert_pick_and_place_is_level_seven(catalog):
    spec = pnp(catalog)
    assert n_levels("pick_and_place") == 7
    assert assign_level(synth_expert_demo(spec, 0), spec) == 7


def test_never_approaching_is_level_one(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    traj, log = assemble_nonexpert(demo, DeviationPlan((Branch(0, 3, 0.002),)), spec)
    assert assign_level(traj, spec, log) == 1


def test_grasp_then_terminate_is_level_four(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    tg = detect_events(demo, spec).first("grasp", spec.subtasks[0].target_entity).timestep
    traj, log = assemble_nonexpert(demo, DeviationPlan((Branch(tg, 0, 0.0),)), spec)
    assert assign_level(traj, spec, log) == 4


def test_unknown_group_level():
    with pytest.raises(SchemaError):
        n_levels("juggling")
    spec = reach_spec()
    object.__setattr__(spec, "task_group", "juggling")
    demo_like = Trajectory("x", 0, (Step(spec.scene, Action((0, 0, 0), "hold"), Provenance.expert(0)),), ())
    with pytest.raises(SchemaError):
        assign_level(demo_like, spec)


def test_removing_terminate_never_lowers_level(catalog):
    rng = np.random.default_rng(0)
    for spec in catalog:
        demo = synth_expert_demo(spec, 0)
        full = assign_level(demo, spec)
        for _ in range(3):
            q = int(rng.integers(0, demo.horizon))
            traj, log = assemble_nonexpert(demo, DeviationPlan((Branch(q, 5, 0.01),), seed=q), spec)
            assert assign_level(traj, spec, log) <= full


def test_level_counts_per_group(catalog):
    for spec in catalog:
        counts = default_counts(spec)
        assert set(counts) == set(range(1, n_levels(spec.task_group) + 1))
        assert set(counts.values()) == {LEVEL_COUNTS[spec.task_group]}


def test_generated_video_hits_requested_level(catalog):
    spec = pnp(catalog)
    for vid, level in video_ids(spec)[::3]:
        v = generate_video(spec, level, vid, 5)
        assert v.level == level == assign_level(v.traj, spec)


# ---------------------------------------------------------------- frames


def test_downsample_examples():
    idx = downsample_frames(300, 30)
    assert len(idx) == 30 and idx[0] == 0 and idx[-1] == 299
    assert downsample_frames(10, 30) == list(range(10))
    assert downsample_frames(57, 2) == [0, 56]


@given(st.integers(2, 2000), st.integers(2, 120))
def test_downsample_properties(h, b):
    idx = downsample_frames(h, b)
    assert len(idx) == min(h, b)
    assert idx[0] == 0 and idx[-1] == h - 1
    assert all(x < y for x, y in zip(idx, idx[1:]))


def test_downsample_errors():
    with pytest.raises(InputError):
        downsample_frames(1, 30)
    with pytest.raises(InputError):
        downsample_frames(10, 1)


# ---------------------------------------------------------------- io


def test_task_json_roundtrip(catalog):
    for spec in catalog:
        doc = json.loads(json.dumps(spec.to_dict()))
        assert task_from_json(doc) == spec


def test_task_json_schema_errors(catalog):
    doc = catalog[0].to_dict()
    del doc["subtasks"]
    with pytest.raises(SchemaError):
        task_from_json(doc)
    with pytest.raises(SchemaError):
        plan_from_json({"branches": [{"q": -1, "w": 1, "magnitude": 0.1}]})


def test_trajectory_roundtrip(tmp_path, catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    traj, log = assemble_nonexpert(demo, DeviationPlan((Branch(10, 3, 0.01, h=2, n_interp=4),), seed=2), spec)
    write_trajectory(tmp_path / "t.jsonl", traj)
    write_events(tmp_path / "e.json", log)
    back = read_trajectory(tmp_path / "t.jsonl")
    assert back == traj
    assert read_events(tmp_path / "e.json").to_list() == log.to_list()
    header = json.loads((tmp_path / "t.jsonl").read_text().splitlines()[0])
    assert header["task_id"] == spec.id and header["seed"] == 0
    write_trajectory(tmp_path / "t2.jsonl", traj)
    assert (tmp_path / "t.jsonl").read_bytes() == (tmp_path / "t2.jsonl").read_bytes()


def test_plan_for_level_terminates_below_top(catalog):
    spec = pnp(catalog)
    demo = synth_expert_demo(spec, 0)
    log = detect_events(demo, spec)
    plan = plan_for_level(demo, log, spec, 3, stream(0, "p"), DEFAULT_CONFIG)
    assert any(b.h == TERMINATE for b in plan.branches)
