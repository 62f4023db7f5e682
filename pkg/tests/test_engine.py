"""Reasoning engine: directives, prompts, windowing, recursion, composition, baselines."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rover.engine.baselines import BaselineConfig, gvl_run, shuffle_order, temporal_concat_run
from rover.engine.directives import (
    NextFrame,
    NewSubtask,
    ProgressRecord,
    TaskComplete,
    format_record,
    parse_directive,
    parse_records,
)
from rover.engine.prompts import (
    gvl_system_prompt,
    load_template,
    render_batch_context,
    render_rover_context,
    rover_system_prompt,
)
from rover.engine.rover import ReasoningNode, Record, RunConfig, compose_progress, flatten_lines, rover_run
from rover.engine.tokens import Frame, fill_images
from rover.engine.window import Entry, apply_window, derive_child_context, summarize_child
from rover.errors import CompositionError, MalformedOutput, ProtocolError, RunAborted
from rover.gateway import CallableBackend, Gateway
from rover.pipeline import make_frames, oracle_gateway, run_method, sample_timesteps


def frames(n, vid="v"):
    return [Frame(f"f{i}", i, i, vid) for i in range(n)]


def scripted(fn):
    """Gateway over a function of (request, current frame index)."""
    calls = []

    def inner(req):
        calls.append(req)
        return fn(req, req.context.frames()[-1].index)

    gw = Gateway(CallableBackend(inner, "scripted"))
    gw.calls = calls
    return gw


def rec(p, desc="d"):
    return format_record(desc, p) + "\n[next-frame]"


# ---------------------------------------------------------------- directives


def test_parse_progress_and_next_frame():
    out = parse_directive("Frame description: gripper nears mug\nSubtask completion percentage: 40%\n[next-frame]")
    assert out == [ProgressRecord("gripper nears mug", 40), NextFrame()]


def test_parse_new_subtask_wins():
    out = parse_directive("Frame description: mug grasped\nThe robot needs to: place the mug in the sink")
    assert out == [NewSubtask("place the mug in the sink", "mug grasped")]
    both = parse_directive("Frame description: x\nSubtask completion percentage: 10%\nThe robot needs to: y")
    assert both == [NewSubtask("y", "x")]


def test_parse_negative_task_percent():
    assert parse_directive("Task completion percentage: -10%") == [ProgressRecord("", -10)]


def test_parse_completion_and_clipping():
    out = parse_directive("Frame description: a\nSubtask completion percentage: 250%\n[task-complete]")
    assert out == [ProgressRecord("a", 100), TaskComplete()]


def test_parse_malformed():
    with pytest.raises(MalformedOutput):
        parse_directive("I am not sure what is happening here.")


def test_parse_records_in_order():
    text = "\n".join(format_record(f"d{i}", 10 * i, task_level=True) for i in range(4))
    assert parse_records(text) == [ProgressRecord(f"d{i}", 10 * i) for i in range(4)]


@given(st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs"), blacklist_characters="\n\r\x85  "), min_size=1).map(str.strip).filter(bool), st.integers(-100, 100))
def test_format_parse_roundtrip(desc, pct):
    assert parse_directive(format_record(desc, pct))[0] == ProgressRecord(desc, pct)


# ---------------------------------------------------------------- tokens and prompts


def test_fill_images_slot_mismatch():
    with pytest.raises(ValueError):
        fill_images("a [IMG] b [IMG]", frames(1))
    seq = fill_images("a [IMG] b", frames(1))
    assert seq.render() == "a [IMG:f0] b" and seq.n_frames() == 1 and seq.text_units() == 2


def test_rover_context_exact_text():
    f = frames(3)
    ctx = render_rover_context([Entry(f[0], "start", 0), Entry(f[1], "closer", 40)], f[2])
    expected = (
        "Initial robot scene: [IMG:f0]\n"
        "Frame description: start\n"
        "Subtask completion percentage: 0%\n\n"
        "Most recent previous frame: [IMG:f1]\n"
        "Frame description: closer \n"
        "Subtask completion percentage: 40%\n\n"
        "Current frame: [IMG:f2]"
    )
    assert ctx.render() == expected


def test_first_frame_context_has_one_frame():
    assert render_rover_context([], frames(1)[0]).render() == "Current frame: [IMG:f0]"


def test_system_prompt_substitution():
    text = rover_system_prompt("grasp the mug")
    assert "for the subtask of grasp the mug." in text
    assert "{task_description}" not in text
    # the literal {} placeholders of the response format are kept
    assert "The robot needs to: {}" in text
    plain = rover_system_prompt("grasp the mug", allow_subtasks=False)
    assert "The robot needs to" not in plain
    assert len(plain) < len(text)
    assert plain.endswith(load_template("rover_system").split("\n\n")[-1])


def test_batch_context_counts():
    f = frames(30)
    ctx = render_batch_context(f[0], f, "start")
    assert ctx.n_frames() == 31
    assert "Frame 30: [IMG:f29]" in ctx.render()


# ---------------------------------------------------------------- window and hand-off


def test_window_examples():
    f = frames(4)
    y = [Entry(f[0], "a", 0)]
    assert apply_window(y, f[1]).n_frames() == 2
    y = [Entry(f[0], "a", 0), Entry(f[1], "b", 10), Entry(f[2], "c", 20)]
    assert [x.frame_id for x in apply_window(y, f[3]).frames()] == ["f0", "f2", "f3"]
    full = apply_window(y, f[3], enabled=False)
    assert [x.frame_id for x in full.frames()] == ["f0", "f1", "f2", "f3"]
    assert "Previous frame 1:" in full.render()


def test_child_context():
    f = frames(8)
    y = [Entry(f[i], f"d{i}", i) for i in range(8)]
    ctx = derive_child_context(y, NewSubtask("grasp the mug", "mug in view"))
    assert ctx.description == "grasp the mug"
    assert [e.frame.frame_id for e in ctx.entries] == ["f7"]
    assert ctx.entries[0].percent == 0 and ctx.entries[0].description == "d7"
    rendered = render_rover_context(list(ctx.entries), None).render()
    assert "Subtask completion percentage: 0%" in rendered
    with pytest.raises(ProtocolError):
        derive_child_context([], NewSubtask("x"))


def test_summarize_child():
    f = frames(13)
    child = ReasoningNode("0.1", "grasp")
    for i in range(7, 13):
        child.records.append(Record(f[i], f"d{i}", 10 * (i - 7), 3))
        child.y.append(Entry(f[i], f"d{i}", 10 * (i - 7)))
    s = summarize_child(child)
    assert s.frame.frame_id == "f12" and s.description == "d12"
    with pytest.raises(ProtocolError):
        summarize_child(ReasoningNode("0.2", "x"))


# ---------------------------------------------------------------- composition


def _line(node_id, idx, pcts):
    n = ReasoningNode(node_id, node_id)
    n.records = [Record(Frame(f"f{i}", i, i), "", p, 1) for i, p in zip(idx, pcts)]
    return n


def test_compose_two_lines():
    root = ReasoningNode("0", "task")
    root.children = [(0, _line("0.1", [0, 1, 2], [0, 50, 100])), (0, _line("0.2", [3, 4], [0, 100]))]
    assert compose_progress(root).values == [0, 25, 50, 50, 100]


def test_compose_identity_single_line():
    assert compose_progress(_line("0", [0, 1, 2], [0, 30, 70])).values == [0, 30, 70]


def test_compose_three_lines():
    root = ReasoningNode("0", "task")
    root.children = [(0, _line(f"0.{k}", [2 * k, 2 * k + 1], [0, 100])) for k in range(3)]
    out = compose_progress(root).values
    assert out == pytest.approx([0, 100 / 3, 100 / 3, 200 / 3, 200 / 3, 100])


def test_compose_coverage_errors():
    root = ReasoningNode("0", "task")
    root.children = [(0, _line("0.1", [0, 1], [0, 50])), (0, _line("0.2", [1, 2], [0, 100]))]
    with pytest.raises(CompositionError):
        compose_progress(root)
    with pytest.raises(CompositionError):
        compose_progress(_line("0", [0, 2], [0, 100]), [0, 1, 2])


def test_flatten_splits_at_spawn():
    root = _line("0", [0, 5], [0, 100])
    root.children = [(1, _line("0.1", [1, 2, 3, 4], [0, 30, 60, 100]))]
    lines = flatten_lines(root)
    assert [[r.frame.index for r in ln] for ln in lines] == [[0], [1, 2, 3, 4], [5]]


# ---------------------------------------------------------------- recursive runs


def test_three_frame_oracle_run(expert_videos):
    video, labels = next((v, l) for v, l in expert_videos if len(v.spec.subtasks) == 1)
    gw = oracle_gateway([(video, labels)], budget=3)
    ts = sample_timesteps(video, 3)
    res = rover_run(make_frames(video, ts), video.spec.description, gw)
    assert [n.node_id for n in res.tree.walk()] == ["0"]
    assert [r.percent for r in res.tree.records] == [round(100 * labels.values.v[t]) for t in ts]
    assert res.prediction.n_lines == 1


def test_one_frame_video():
    gw = scripted(lambda req, i: rec(0))
    res = rover_run(frames(1), "task", gw)
    assert len(gw.calls) == 1 and gw.calls[0].meta["purpose"] == "first-frame"
    assert res.prediction.values == [0]


def test_window_caps_frames_per_request():
    gw = scripted(lambda req, i: rec(min(100, 5 * i)))
    rover_run(frames(30), "task", gw)
    assert max(r.context.n_frames() for r in gw.calls) == 3
    gw2 = scripted(lambda req, i: rec(min(100, 5 * i)))
    rover_run(frames(30), "task", gw2, RunConfig.for_method("rover-recursion-only"))
    assert max(r.context.n_frames() for r in gw2.calls) == 30


def _nested_script(req, i):
    node = req.meta["node_id"]
    if req.meta["purpose"] == "first-frame":
        return rec(0)
    if node == "0":
        return rec(100) if i >= 5 else "Frame description: d\nThe robot needs to: A"
    if node == "0.1":
        return rec(100) if i >= 4 else "Frame description: d\nThe robot needs to: B"
    return rec(100)


def test_nested_child_summary_only():
    res = rover_run(frames(7), "task", scripted(_nested_script))
    root = res.tree
    child = root.children[0][1]
    grand = child.children[0][1]
    assert [r.frame.index for r in root.records] == [0, 5, 6]
    assert [r.frame.index for r in child.records] == [1, 4]
    assert [r.frame.index for r in grand.records] == [2, 3]
    root_summaries = [e for e in root.y if e.summary]
    assert [e.frame.index for e in root_summaries] == [4]
    assert [e.frame.index for e in child.y if e.summary] == [3]
    # every frame gets exactly one record somewhere
    idx = sorted(r.frame.index for n in root.walk() for r in n.records)
    assert idx == list(range(7))
    # spawn frames are anchored at 0% in the child
    assert child.records[0].percent == 0 and grand.records[0].percent == 0


def test_depth_limit_continuation():
    def script(req, i):
        if req.meta["purpose"] == "first-frame":
            return rec(0)
        return "Frame description: d\nThe robot needs to: deeper"

    res = rover_run(frames(5), "task", scripted(script), RunConfig(max_depth=1))
    assert [n.depth for n in res.tree.walk()] == [0, 1]
    assert len(res.warnings) == 3
    assert sorted(r.frame.index for n in res.tree.walk() for r in n.records) == list(range(5))


def test_malformed_retry_then_abort():
    def script(req, i):
        if req.meta["attempt"] == 0:
            return "no idea"
        return rec(10)

    gw = scripted(script)
    res = rover_run(frames(3), "task", gw)
    assert len(gw.calls) == 6
    assert sum("error" in t for t in res.transcript) == 3

    bad = scripted(lambda req, i: "no idea")
    with pytest.raises(RunAborted) as exc:
        rover_run(frames(3), "task", bad, RunConfig(max_model_calls_per_frame=3))
    assert len(bad.calls) == 3
    assert exc.value.partial is not None


def test_run_is_deterministic(expert_videos):
    video, labels = expert_videos[0]
    frames_ = make_frames(video, sample_timesteps(video))
    a = rover_run(frames_, video.spec.description, oracle_gateway([(video, labels)]))
    b = rover_run(frames_, video.spec.description, oracle_gateway([(video, labels)]))
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_ablation_flags():
    assert RunConfig.for_method("rover") == RunConfig(True, True)
    assert RunConfig.for_method("rover-window-only").recursion_enabled is False
    assert RunConfig.for_method("rover-recursion-only").window_enabled is False
    with pytest.raises(ValueError):
        RunConfig.for_method("gvl")


# ---------------------------------------------------------------- baselines


@given(st.integers(1, 80), st.integers(0, 2**32 - 1))
def test_shuffle_is_bijection(n, seed):
    order = shuffle_order(n, seed)
    assert order[0] == 0 and sorted(order) == list(range(n))
    inv = [0] * n
    for pos, src in enumerate(order):
        inv[src] = pos
    assert [order[inv[i]] for i in range(n)] == list(range(n))


def _batch_script(req, i):
    listed = req.context.frames()[1:]
    return "\n".join(format_record(f"d{f.index}", 3 * f.index + 1, task_level=True) for f in listed)


def test_temporal_concat_single_request():
    gw = scripted(_batch_script)
    res = temporal_concat_run(frames(30), "task", gw)
    assert len(gw.calls) == 1 and gw.calls[0].context.n_frames() == 31
    assert res.prediction.values == [3 * i + 1 for i in range(30)]
    assert res.prediction.descriptions == [f"d{i}" for i in range(30)]


def test_gvl_unpermutes_and_anchors():
    gw = scripted(_batch_script)
    res = gvl_run(frames(12), "task", gw, BaselineConfig(seed=4))
    order = res.extra["order"]
    assert order != list(range(12))
    listed = [f.index for f in gw.calls[0].context.frames()[1:]]
    assert listed == order
    assert res.prediction.values[0] == 0
    assert res.prediction.values[1:] == [3 * i + 1 for i in range(1, 12)]


def test_gvl_identity_order_matches_temporal_concat():
    g1, g2 = scripted(_batch_script), scripted(_batch_script)
    gvl_run(frames(10), "stack", g1, order=list(range(10)))
    temporal_concat_run(frames(10), "stack", g2)
    a, b = g1.calls[0], g2.calls[0]
    assert a.context.render() == b.context.render()
    # the system prompts differ only in the two sentences about random order
    assert a.system_prompt != b.system_prompt
    assert b.system_prompt == gvl_system_prompt("stack", shuffled=False)
    assert "random" in a.system_prompt and "random" not in b.system_prompt
    assert len(a.system_prompt.split()) - len(b.system_prompt.split()) == 28


def test_batch_record_count_mismatch():
    gw = scripted(lambda req, i: format_record("x", 5, task_level=True))
    with pytest.raises(RunAborted):
        temporal_concat_run(frames(4), "task", gw)
    assert len(gw.calls) == 3


def test_run_method_dispatch(expert_videos):
    video, labels = expert_videos[3]
    fr = make_frames(video, sample_timesteps(video))
    for m in ("rover", "gvl", "temporal-concat", "rover-window-only", "rover-recursion-only"):
        res = run_method(m, fr, video.spec.description, oracle_gateway([(video, labels)]))
        assert len(res.prediction.values) == len(fr)
    with pytest.raises(ValueError):
        run_method("bogus", fr, "t", None)
