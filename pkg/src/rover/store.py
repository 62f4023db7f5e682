"""On-disk layout for datasets, labels, runs and evaluations under one output root.

    <out>/dataset/manifest.json
    <out>/dataset/tasks/<task_id>.json
    <out>/dataset/videos/<video_id>/{trajectory.jsonl, demo.jsonl, events.json, meta.json}
    <out>/labels/<video_id>.jsonl
    <out>/runs/<method>/{manifest.json, <video_id>.json, transcripts/<video_id>.jsonl}
    <out>/eval/<method>/per_video.jsonl
    <out>/report/<method>/...
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .errors import InputError
from .trajgen.dataset import Video
from .trajgen.io import dumps, plan_from_json, read_events, read_trajectory, task_from_json, write_events, write_trajectory


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()[:16]


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def file_sha(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Layout:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def dataset(self) -> Path:
        return self.root / "dataset"

    def video_dir(self, vid: str) -> Path:
        return self.dataset / "videos" / vid

    def task_file(self, task_id: str) -> Path:
        return self.dataset / "tasks" / f"{task_id}.json"

    def label_file(self, vid: str) -> Path:
        return self.root / "labels" / f"{vid}.jsonl"

    def run_dir(self, method: str) -> Path:
        return self.root / "runs" / method

    def eval_dir(self, method: str) -> Path:
        return self.root / "eval" / method

    def report_dir(self, method: str) -> Path:
        return self.root / "report" / method

    def manifest(self) -> dict:
        p = self.dataset / "manifest.json"
        if not p.exists():
            raise InputError(f"no dataset at {self.dataset} (run `gen` first)")
        return json.loads(p.read_text())


def save_video(layout: Layout, video: Video) -> dict:
    d = layout.video_dir(video.video_id)
    d.mkdir(parents=True, exist_ok=True)
    write_trajectory(d / "trajectory.jsonl", video.traj)
    write_trajectory(d / "demo.jsonl", video.demo)
    write_events(d / "events.json", video.events)
    meta = {
        "video_id": video.video_id,
        "task_id": video.spec.id,
        "level": video.level,
        "seed": video.seed,
        "plan": video.plan.to_dict(),
        "horizon": video.traj.horizon,
    }
    (d / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    return {
        "video_id": video.video_id,
        "task_id": video.spec.id,
        "level": video.level,
        "horizon": video.traj.horizon,
        "sha256": file_sha(d / "trajectory.jsonl"),
    }


def load_video(layout: Layout, vid: str, specs: dict | None = None) -> Video:
    d = layout.video_dir(vid)
    if not (d / "trajectory.jsonl").exists():
        raise InputError(f"missing trajectory for video {vid}")
    meta = json.loads((d / "meta.json").read_text())
    if specs is not None and meta["task_id"] in specs:
        spec = specs[meta["task_id"]]
    else:
        spec = task_from_json(json.loads(layout.task_file(meta["task_id"]).read_text()))
    return Video(
        video_id=vid,
        spec=spec,
        demo=read_trajectory(d / "demo.jsonl"),
        plan=plan_from_json(meta["plan"]),
        traj=read_trajectory(d / "trajectory.jsonl"),
        events=read_events(d / "events.json"),
        level=int(meta["level"]),
        seed=int(meta["seed"]),
    )


def load_specs(layout: Layout) -> dict:
    out = {}
    for p in sorted((layout.dataset / "tasks").glob("*.json")):
        spec = task_from_json(json.loads(p.read_text()))
        out[spec.id] = spec
    return out
