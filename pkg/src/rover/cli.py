"""Command-line entry point: gen, label, run, eval, report.

Exit codes: 0 success, 1 some videos failed (failures are recorded), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import jsonschema

from .engine.rover import METHODS
from .errors import BackendError, InputError, RoverError, SchemaError
from .evalbench.report import evaluate_video, write_report
from .gateway import (
    EndpointConfig,
    Gateway,
    OracleBackend,
    OracleBundle,
    OracleNoise,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    ReplayStore,
)
from .pipeline import label_video, make_frames, run_method, sample_timesteps
from .store import Layout, config_hash, load_specs, load_video, save_video, write_atomic
from .trajgen.catalog import build_catalog
from .trajgen.dataset import default_counts, generate_video, video_ids, video_seed
from .trajgen.io import dumps
from .trajgen.kinematics import GenConfig
from .trajgen.levels import LEVEL_COUNTS, n_levels
from .valuelabel import read_label_records, write_labels

log = logging.getLogger("rover")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2

GEN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "tasks": {"type": "array", "items": {"type": "string"}},
        "counts_per_level": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "a_max": {"type": "number", "exclusiveMinimum": 0},
    },
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "method": {"enum": list(METHODS)},
        "backend": {"enum": ["oracle", "remote", "replay"]},
        "videos": {"type": "array", "items": {"type": "string"}},
        "tasks": {"type": "array", "items": {"type": "string"}},
        "max_depth": {"type": "integer", "minimum": 1},
        "max_model_calls_per_frame": {"type": "integer", "minimum": 1},
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "percent_jitter_sd": {"type": "number", "minimum": 0},
                "description_omission_rate": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
    },
}

EVAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"judge": {"enum": ["rule", "remote"]}},
}


class UsageError(RoverError):
    pass


def _load_config(path, schema) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"cannot read config {path}: {e}") from e
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        raise SchemaError(f"config {path}: {e.message}") from e
    return doc


def _pool_map(fn, items, workers: int):
    """Run ``fn`` per item; returns (results, failures) keyed by item."""
    results, failures = {}, {}

    def wrapped(item):
        try:
            return item, fn(item), None
        except (RoverError, ValueError, OSError) as e:
            return item, None, f"{type(e).__name__}: {e}"

    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        for item, res, err in ex.map(wrapped, items):
            if err is None:
                results[item] = res
            else:
                log.error("%s failed: %s", item, err)
                failures[item] = err
    return results, failures


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    cfg = _load_config(args.config, GEN_SCHEMA)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    layout = Layout(args.out)
    catalog = build_catalog()
    known = {s.id for s in catalog}
    wanted = cfg.get("tasks")
    if wanted:
        unknown = sorted(set(wanted) - known)
        if unknown:
            raise InputError(f"unknown task ids: {', '.join(unknown)}")
        catalog = [s for s in catalog if s.id in set(wanted)]
    for g in cfg.get("counts_per_level", {}):
        if g not in LEVEL_COUNTS:
            raise InputError(f"unknown task group in counts_per_level: {g}")
    gen_cfg = GenConfig(a_max=cfg["a_max"]) if "a_max" in cfg else GenConfig()
    h = config_hash(cfg)

    mpath = layout.dataset / "manifest.json"
    if mpath.exists() and not args.force:
        old = json.loads(mpath.read_text())
        if old.get("config_hash") == h:
            print(f"dataset up to date ({len(old['videos'])} videos)")
            return EXIT_OK
        raise InputError(f"{layout.dataset} holds a dataset with a different config; pass --force to replace it")

    jobs = []
    for spec in catalog:
        per = cfg.get("counts_per_level", {}).get(spec.task_group)
        counts = None if per is None else {lv: per for lv in range(1, n_levels(spec.task_group) + 1)}
        for vid, level in video_ids(spec, counts or default_counts(spec)):
            jobs.append((spec, vid, level))
    for spec in catalog:
        write_atomic(layout.task_file(spec.id), json.dumps(spec.to_dict(), sort_keys=True, indent=1) + "\n")

    by_vid = {vid: (spec, level) for spec, vid, level in jobs}

    def one(vid):
        spec, level = by_vid[vid]
        video = generate_video(spec, level, vid, video_seed(cfg["seed"], vid), gen_cfg)
        return save_video(layout, video)

    results, failures = _pool_map(one, [vid for _, vid, _ in jobs], args.workers)
    manifest = {
        "dataset_id": f"rover-{h}",
        "config": cfg,
        "config_hash": h,
        "n_tasks": len(catalog),
        "videos": [results[v] for v in sorted(results)],
        "failures": failures,
    }
    write_atomic(mpath, json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    print(f"generated {len(results)} videos across {len(catalog)} tasks ({len(failures)} failed)")
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------- label


def cmd_label(args) -> int:
    layout = Layout(args.out)
    manifest = layout.manifest()
    specs = load_specs(layout)
    vids = [v["video_id"] for v in manifest["videos"]]
    missing = [v for v in vids if not (layout.video_dir(v) / "trajectory.jsonl").exists()]
    if missing:
        raise InputError(f"missing trajectories for {len(missing)} videos (first: {missing[0]})")
    existing = [v for v in vids if layout.label_file(v).exists()]
    if existing and not args.force:
        raise InputError(f"{len(existing)} label files already exist; pass --force to overwrite")

    def one(vid):
        video = load_video(layout, vid, specs)
        labels = label_video(video)
        layout.label_file(vid).parent.mkdir(parents=True, exist_ok=True)
        write_labels(layout.label_file(vid), labels)
        return labels.values.degenerate

    results, failures = _pool_map(one, vids, args.workers)
    print(f"labelled {len(results)} videos ({sum(results.values())} degenerate, {len(failures)} failed)")
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------- run


def _select_videos(manifest, cfg) -> list[str]:
    vids = [v["video_id"] for v in manifest["videos"]]
    if cfg.get("tasks"):
        tasks = set(cfg["tasks"])
        vids = [v["video_id"] for v in manifest["videos"] if v["task_id"] in tasks]
    if cfg.get("videos"):
        missing = sorted(set(cfg["videos"]) - set(vids))
        if missing:
            raise InputError(f"unknown video ids: {', '.join(missing[:5])}")
        vids = [v for v in vids if v in set(cfg["videos"])]
    return vids


def _make_backend(kind: str, replay: str | None, videos, noise, seed):
    if kind == "oracle":
        bundles = [OracleBundle.from_video(v, label_video(v), sample_timesteps(v), noise, seed) for v in videos]
        return OracleBackend(bundles)
    if kind == "replay":
        if not replay:
            raise InputError("--backend replay needs --replay PATH")
        if not Path(replay).exists():
            raise InputError(f"replay store {replay} does not exist")
        return ReplayBackend(ReplayStore(replay))
    remote = RemoteBackend(EndpointConfig.from_env())
    return RecordingBackend(remote, ReplayStore(replay)) if replay else remote


def cmd_run(args) -> int:
    cfg = _load_config(args.config, RUN_SCHEMA)
    for key in ("seed", "method", "backend"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("seed", 0)
    cfg.setdefault("method", "rover")
    cfg.setdefault("backend", "oracle")
    if cfg["method"] not in METHODS:
        raise InputError(f"unknown method {cfg['method']}")
    layout = Layout(args.out)
    manifest = layout.manifest()
    specs = load_specs(layout)
    vids = _select_videos(manifest, cfg)
    h = config_hash({"run": cfg, "dataset": manifest["config_hash"]})
    rdir = layout.run_dir(cfg["method"])
    (rdir / "transcripts").mkdir(parents=True, exist_ok=True)

    todo = []
    for vid in vids:
        out = rdir / f"{vid}.json"
        if out.exists() and not args.force:
            try:
                if json.loads(out.read_text()).get("config_hash") == h:
                    continue
            except json.JSONDecodeError:
                pass
        todo.append(vid)

    videos = {vid: load_video(layout, vid, specs) for vid in todo}
    noise = OracleNoise(**cfg.get("noise", {}))
    try:
        backend = _make_backend(cfg["backend"], args.replay, list(videos.values()), noise, cfg["seed"])
    except BackendError as e:
        raise InputError(str(e)) from e
    gateway = Gateway(backend)
    overrides = {k: cfg[k] for k in ("max_depth", "max_model_calls_per_frame") if k in cfg}

    def one(vid):
        video = videos[vid]
        ts = sample_timesteps(video)
        frames = make_frames(video, ts)
        seed = video_seed(cfg["seed"], vid)
        res = run_method(cfg["method"], frames, video.spec.description, gateway, seed=seed, **overrides)
        tpath = rdir / "transcripts" / f"{vid}.jsonl"
        write_atomic(tpath, "".join(dumps(e) + "\n" for e in res.transcript))
        doc = res.to_dict()
        doc.update(video_id=vid, method=cfg["method"], config_hash=h, timesteps=ts, seed=seed)
        doc["usage"] = {
            "requests": len(res.transcript),
            "input_frames": sum(e["n_frames"] for e in res.transcript),
            "max_frames_per_request": max((e["n_frames"] for e in res.transcript), default=0),
        }
        write_atomic(rdir / f"{vid}.json", json.dumps(doc, sort_keys=True, indent=1) + "\n")
        return True

    _, failures = _pool_map(one, todo, args.workers)
    run_manifest = {
        "dataset_id": manifest["dataset_id"],
        "method": cfg["method"],
        "backend": gateway.backend_id,
        "config": cfg,
        "config_hash": h,
        "videos": vids,
        "failures": failures,
        "outputs": str(rdir),
    }
    write_atomic(rdir / "manifest.json", json.dumps(run_manifest, sort_keys=True, indent=1) + "\n")
    print(f"{cfg['method']}: ran {len(todo) - len(failures)} videos, skipped {len(vids) - len(todo)}, failed {len(failures)}")
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------- eval / report


def _labels_from_file(path: Path):
    if not path.exists():
        raise InputError(f"missing label file {path} (run `label` first)")
    _, records = read_label_records(path)
    return SimpleNamespace(values=SimpleNamespace(v=[r["v"] for r in records]))


def cmd_eval(args) -> int:
    from .engine.rover import PredictionSeries
    from .evalbench.judge import RemoteJudge
    from .evalbench.qa import RemoteQA

    cfg = _load_config(args.config, EVAL_SCHEMA)
    method = args.method or "rover"
    layout = Layout(args.out)
    manifest = layout.manifest()
    specs = load_specs(layout)
    rdir = layout.run_dir(method)
    if not (rdir / "manifest.json").exists():
        raise InputError(f"no run for method {method} (run `run --method {method}` first)")
    run_manifest = json.loads((rdir / "manifest.json").read_text())
    judge = qa_judge = None
    if cfg.get("judge") == "remote":
        gw = Gateway(RemoteBackend(EndpointConfig.from_env()))
        judge, qa_judge = RemoteJudge(gw), RemoteQA(gw)

    def one(vid):
        pfile = rdir / f"{vid}.json"
        if not pfile.exists():
            raise InputError(f"no prediction for {vid}")
        doc = json.loads(pfile.read_text())
        video = load_video(layout, vid, specs)
        labels = _labels_from_file(layout.label_file(vid))
        if len(labels.values.v) != video.traj.horizon:
            raise InputError(f"label length {len(labels.values.v)} does not match horizon {video.traj.horizon}")
        pred = PredictionSeries.from_dict(doc["prediction"])
        return evaluate_video(video, labels, doc["timesteps"], pred, method, judge, qa_judge)

    vids = [v for v in run_manifest["videos"] if v not in run_manifest.get("failures", {})]
    results, failures = _pool_map(one, vids, args.workers)
    edir = layout.eval_dir(method)
    lines = [json.dumps(results[v], sort_keys=True) for v in sorted(results)]
    lines += [json.dumps({"video_id": v, "error": failures[v]}, sort_keys=True) for v in sorted(failures)]
    write_atomic(edir / "per_video.jsonl", "\n".join(lines) + "\n")
    print(f"{method}: evaluated {len(results)} videos ({len(failures)} errors)")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_report(args) -> int:
    method = args.method or "rover"
    layout = Layout(args.out)
    path = layout.eval_dir(method) / "per_video.jsonl"
    if not path.exists():
        raise InputError(f"no evaluation for method {method} (run `eval` first)")
    reports = [json.loads(x) for x in path.read_text().splitlines() if x.strip()]
    reports = [r for r in reports if "error" not in r]
    if not reports:
        raise InputError("no successfully evaluated videos to report")
    agg = write_report(layout.report_dir(method), reports)
    o = agg["overall"]
    print(
        f"{method}: {o['n']} videos  pearson={o['pearson_gt_mean']:.3f}  "
        f"error_rate={o['error_rate_mean']:.3f}  success_rate={o['success_rate_mean']:.3f}  "
        f"qa_accuracy={o['qa_accuracy_mean']:.3f}"
    )
    for note in agg["notes"]:
        print(f"note: {note}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rover", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", default="rover_out", help="output root (default: %(default)s)")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--workers", type=int, default=4)
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        if seed:
            sp.add_argument("--seed", type=int)

    sp = sub.add_parser("gen", help="generate the video dataset")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("label", help="compute progress labels")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_label)

    sp = sub.add_parser("run", help="run a reasoning method over the dataset")
    common(sp)
    sp.add_argument("--method", choices=METHODS)
    sp.add_argument("--backend", choices=["oracle", "remote", "replay"])
    sp.add_argument("--replay", help="record/replay store (JSONL); required for --backend replay")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("eval", help="score predictions against ground truth")
    common(sp, seed=False)
    sp.add_argument("--method", choices=METHODS)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("report", help="aggregate evaluations into report files")
    common(sp, seed=False)
    sp.add_argument("--method", choices=METHODS)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SchemaError, InputError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
