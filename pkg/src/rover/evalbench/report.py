"""Per-video evaluation, stratified aggregation and report files."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

from ..facts import frame_facts
from ..trajgen.levels import n_levels
from .judge import judge_frames
from .metrics import frame_index_correlation, l2_distance, mean_se, pearson
from .qa import answer_questions, build_qa_items, qa_metrics

BUCKETS = ((10, "0-10"), (20, "10-20"), (30, "20-30"))
OVERFLOW_BUCKET = "30+"
STATE_TYPES = ("expert", "non-expert", "interpolating")


def context_bucket(n_frames: int) -> str:
    for hi, label in BUCKETS:
        if n_frames <= hi:
            return label
    return OVERFLOW_BUCKET


def evaluate_video(video, labels, timesteps, prediction, method: str = "", judge=None, qa_judge=None) -> dict:
    """All per-video metrics. The ground-truth series is sampled at the
    prediction's frames and put on the percent scale."""
    pred = list(prediction.values)
    if len(pred) != len(timesteps):
        raise ValueError(f"prediction has {len(pred)} frames, expected {len(timesteps)}")
    gt = [100.0 * labels.values.v[t] for t in timesteps]
    pg = pearson(pred, gt) if len(pred) >= 2 else None
    fi = frame_index_correlation(pred) if len(pred) >= 2 else None
    facts = frame_facts(video.traj, video.spec, video.events, timesteps)
    jr = judge_frames(prediction.descriptions, [f.true_set for f in facts], judge)
    items = answer_questions(prediction.descriptions, build_qa_items(video.spec, video.events, timesteps), qa_judge)
    frames = []
    for i, t in enumerate(timesteps):
        v = jr.verdicts[i]
        frames.append(
            {
                "frame_index": i,
                "timestep": t,
                "state_type": video.traj.steps[t].provenance.state_type,
                "context_bucket": context_bucket(prediction.context_frames[i]),
                "abs_error": abs(pred[i] - gt[i]),
                "error": None if v is None else float(v.has_false_statement),
                "success": None if v is None else float(v.has_true_statement and not v.has_false_statement),
            }
        )
    return {
        "video_id": video.video_id,
        "task_id": video.spec.id,
        "task_group": video.spec.task_group,
        "level": video.level,
        "method": method,
        "nonexpert_fraction": sum(f["state_type"] != "expert" for f in frames) / len(frames),
        "pearson_gt": None if pg is None else pg.r,
        "pearson_gt_degenerate": None if pg is None else pg.degenerate,
        "l2_gt": l2_distance(pred, gt),
        "pearson_frame_index": None if fi is None else fi.r,
        "pearson_frame_index_degenerate": None if fi is None else fi.degenerate,
        "error_rate": jr.error_rate,
        "success_rate": jr.success_rate,
        "judge_unevaluated": jr.unevaluated,
        "qa": qa_metrics(items),
        "qa_items": [it.to_dict() for it in items],
        "frames": frames,
    }


VIDEO_METRICS = ("pearson_gt", "l2_gt", "pearson_frame_index", "error_rate", "success_rate")
FRAME_METRICS = ("abs_error", "error", "success")


def _video_values(reports, metric):
    vals = []
    skipped = 0
    for r in reports:
        if metric in ("pearson_gt", "pearson_frame_index"):
            if r[metric] is None or r[f"{metric}_degenerate"]:
                skipped += 1
                continue
        if metric.startswith("qa_"):
            vals.append(r["qa"][metric[3:]])
            continue
        vals.append(r[metric])
    return vals, skipped


def _row(keys: dict, reports, metrics) -> dict:
    row = dict(keys)
    row["n"] = len(reports)
    for m in metrics:
        vals, skipped = _video_values(reports, m)
        if vals:
            row[f"{m}_mean"], row[f"{m}_se"] = mean_se(vals)
        else:
            row[f"{m}_mean"] = row[f"{m}_se"] = None
        if skipped:
            row[f"{m}_degenerate_skipped"] = skipped
    return row


def _frame_row(keys: dict, frames) -> dict:
    row = dict(keys)
    row["n"] = len(frames)
    for m in FRAME_METRICS:
        vals = [f[m] for f in frames if f[m] is not None]
        row[f"{m}_mean"], row[f"{m}_se"] = mean_se(vals) if vals else (None, None)
    return row


def aggregate_report(reports: list[dict]) -> dict:
    """Mean and standard error per stratum. Strata without videos or frames are
    listed under ``notes`` rather than given made-up values."""
    if not reports:
        raise ValueError("aggregate_report needs at least one report")
    metrics = VIDEO_METRICS + ("qa_accuracy", "qa_precision", "qa_recall")
    notes = []
    by_gl = defaultdict(list)
    by_g = defaultdict(list)
    for r in reports:
        by_gl[(r["task_group"], r["level"])].append(r)
        by_g[r["task_group"]].append(r)
    gl_rows = []
    for group in sorted(by_g):
        for level in range(1, n_levels(group) + 1):
            rs = by_gl.get((group, level))
            if not rs:
                notes.append(f"no videos for task_group={group} level={level}")
                continue
            gl_rows.append(_row({"task_group": group, "level": level}, rs, metrics))
    g_rows = [_row({"task_group": g}, by_g[g], metrics) for g in sorted(by_g)]

    frames = [f for r in reports for f in r["frames"]]
    st_rows = []
    for st in STATE_TYPES:
        fs = [f for f in frames if f["state_type"] == st]
        if fs:
            st_rows.append(_frame_row({"state_type": st}, fs))
        else:
            notes.append(f"no frames with state_type={st}")
    cb_rows = []
    for label in [b for _, b in BUCKETS] + [OVERFLOW_BUCKET]:
        fs = [f for f in frames if f["context_bucket"] == label]
        if fs:
            cb_rows.append(_frame_row({"context_bucket": label}, fs))
        else:
            notes.append(f"no frames with context_bucket={label}")
    diffs = [d for r in reports for d in r["qa"]["frame_diffs"]]
    overall = _row({"stratum": "all"}, reports, metrics)
    overall["qa_frame_diffs"] = diffs
    return {
        "overall": overall,
        "task_group_level": gl_rows,
        "task_group": g_rows,
        "state_type": st_rows,
        "context_bucket": cb_rows,
        "notes": notes,
    }


def plot_data(reports: list[dict], agg: dict) -> dict:
    """Series for external plotting: progress correlation and reasoning rates by
    group and level, and QA frame-difference samples by group."""
    fig3 = defaultdict(dict)
    fig4 = defaultdict(dict)
    for row in agg["task_group_level"]:
        g, lv = row["task_group"], str(row["level"])
        fig3[g][lv] = {"mean": row["pearson_gt_mean"], "se": row["pearson_gt_se"], "n": row["n"]}
        fig4[g][lv] = {
            "error_rate": {"mean": row["error_rate_mean"], "se": row["error_rate_se"]},
            "success_rate": {"mean": row["success_rate_mean"], "se": row["success_rate_se"]},
        }
    fig5 = defaultdict(list)
    for r in reports:
        fig5[r["task_group"]].extend(r["qa"]["frame_diffs"])
    return {"progress_by_level": dict(fig3), "reasoning_by_level": dict(fig4), "qa_frame_diffs": dict(fig5)}


def _write_csv(path: Path, rows: list[dict]) -> None:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols and not isinstance(r[k], list):
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})


def write_report(outdir: str | Path, reports: list[dict], agg: dict | None = None) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    agg = agg or aggregate_report(reports)
    for name in ("task_group_level", "task_group", "state_type", "context_bucket"):
        _write_csv(outdir / f"{name}.csv", agg[name])
    (outdir / "summary.json").write_text(json.dumps(agg, indent=2, sort_keys=True))
    (outdir / "plot_data.json").write_text(json.dumps(plot_data(reports, agg), indent=2, sort_keys=True))
    return agg
