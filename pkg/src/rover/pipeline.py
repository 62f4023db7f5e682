"""Glue between generated videos, labels, backends and the reasoning methods."""

from __future__ import annotations

from .engine.baselines import BaselineConfig, gvl_run, temporal_concat_run
from .engine.rover import METHODS, RunConfig, RunResult, rover_run
from .engine.tokens import Frame
from .gateway import Gateway, OracleBackend, OracleBundle, OracleNoise
from .trajgen.frames import downsample_frames
from .valuelabel import Labels, label_trajectory


def sample_timesteps(video, budget: int | None = None) -> list[int]:
    return downsample_frames(video.traj.horizon, budget or video.spec.frame_budget)


def make_frames(video, timesteps: list[int]) -> list[Frame]:
    return [Frame(f"{video.video_id}:{t}", i, t, video.video_id) for i, t in enumerate(timesteps)]


def oracle_gateway(videos_and_labels, noise: OracleNoise = OracleNoise(), seed: int = 0, budget: int | None = None, **kw) -> Gateway:
    bundles = []
    for video, labels in videos_and_labels:
        bundles.append(OracleBundle.from_video(video, labels, sample_timesteps(video, budget), noise, seed))
    return Gateway(OracleBackend(bundles), **kw)


def run_method(method: str, frames: list[Frame], task: str, backend, seed: int = 0, **overrides) -> RunResult:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "gvl":
        return gvl_run(frames, task, backend, BaselineConfig(seed=seed))
    if method == "temporal-concat":
        return temporal_concat_run(frames, task, backend, BaselineConfig(seed=seed))
    cfg = RunConfig.for_method(method, seed=seed, frame_budget=len(frames), **overrides)
    return rover_run(frames, task, backend, cfg)


def label_video(video) -> Labels:
    return label_trajectory(video.traj, video.demo, video.spec)
