"""Scripted oracle backend: answers prompts from ground-truth labels.

It plays the part of a model that sees the true state. Descriptions are the
canonical facts of the newest frame, percentages come from the value labels,
and a new subtask is announced when the newest frame belongs to a later
subtask than the line being reasoned about.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..engine.directives import NEXT_FRAME, format_record
from ..errors import OracleError
from ..facts import FrameFacts, frame_facts, render_facts
from ..trajgen.rng import stream
from ..valuelabel import Labels


@dataclass(frozen=True)
class OracleNoise:
    percent_jitter_sd: float = 0.0
    description_omission_rate: float = 0.0

    def __post_init__(self):
        if self.percent_jitter_sd < 0:
            raise ValueError("percent_jitter_sd must be >= 0")
        if not 0.0 <= self.description_omission_rate <= 1.0:
            raise ValueError("description_omission_rate must be in [0, 1]")


@dataclass
class OracleBundle:
    """Ground truth for one video, indexed by position in the sampled frame list."""

    video_id: str
    task_description: str
    subtask_descriptions: list[str]
    timesteps: list[int]
    v: list[float]
    v_local: list[float]
    subtask_of: list[int]
    complete_at: list[int | None]
    facts: list[FrameFacts]
    noise: OracleNoise = field(default_factory=OracleNoise)
    seed: int = 0

    @classmethod
    def from_video(cls, video, labels: Labels, timesteps: list[int], noise: OracleNoise = OracleNoise(), seed: int = 0):
        spec = video.spec
        sub_idx = video.traj.subtask_indices()
        complete = []
        for sub in spec.subtasks:
            ev = next((e for e in video.events.events if e.kind == "subtask_complete" and e.subtask == sub.id), None)
            complete.append(None if ev is None else ev.timestep)
        return cls(
            video_id=video.video_id,
            task_description=spec.description,
            subtask_descriptions=[s.description for s in spec.subtasks],
            timesteps=list(timesteps),
            v=[labels.values.v[t] for t in timesteps],
            v_local=[labels.local_v[t] for t in timesteps],
            subtask_of=[sub_idx[t] for t in timesteps],
            complete_at=complete,
            facts=frame_facts(video.traj, spec, video.events, timesteps),
            noise=noise,
            seed=seed,
        )

    @property
    def M(self) -> int:
        return len(self.subtask_descriptions)


class OracleBackend:
    """Deterministic backend over a set of oracle bundles (one per video)."""

    def __init__(self, bundles):
        if isinstance(bundles, OracleBundle):
            bundles = [bundles]
        self.bundles = {b.video_id: b for b in bundles}
        self.backend_id = "oracle"

    def _bundle(self, frame) -> OracleBundle:
        b = self.bundles.get(frame.video_id)
        if b is None:
            raise OracleError(f"no ground truth for video {frame.video_id!r}")
        if not 0 <= frame.index < len(b.timesteps) or b.timesteps[frame.index] != frame.timestep:
            raise OracleError(f"frame {frame.frame_id} is outside the bundle")
        return b

    def _description(self, b: OracleBundle, i: int) -> str:
        rate = b.noise.description_omission_rate
        if rate > 0 and stream(b.seed, b.video_id, "omit", i).random() < rate:
            return ""
        return render_facts(b.facts[i].stated)

    def _percent(self, b: OracleBundle, i: int, value: float, *keys) -> int:
        p = round(100 * value)
        sd = b.noise.percent_jitter_sd
        if sd > 0:
            p += int(round(stream(b.seed, b.video_id, "jitter", i, *keys).normal(0.0, sd)))
        return max(-100, min(100, p))

    def complete(self, req) -> str:
        frames = req.context.frames()
        if not frames:
            raise OracleError("request has no frames")
        meta = req.meta
        if meta.get("purpose") == "batch":
            return self._batch(frames[1:], meta)
        frame = frames[-1]
        b = self._bundle(frame)
        i = frame.index
        desc = self._description(b, i)
        g = b.subtask_of[i]
        task = meta.get("task_description", "")
        allow = meta.get("allow_subtasks", True)
        attempt = meta.get("attempt", 0)
        if task == b.task_description and meta.get("is_root", True):
            if allow and b.M > 1:
                return f"Frame description: {desc}\nThe robot needs to: {b.subtask_descriptions[g]}"
            return format_record(desc, self._percent(b, i, b.v[i], "root", attempt)) + "\n" + NEXT_FRAME
        try:
            k = b.subtask_descriptions.index(task)
        except ValueError:
            raise OracleError(f"unknown subtask description {task!r}") from None
        if allow and g > k:
            return f"Frame description: {desc}\nThe robot needs to: {b.subtask_descriptions[g]}"
        value = b.v_local[i] if g == k else (0.0 if g < k else 1.0)
        p = self._percent(b, i, value, k, attempt)
        done = b.complete_at[k] is not None and b.complete_at[k] <= frame.timestep
        if p >= 100 and not done:
            p = 99
        return format_record(desc, p) + "\n" + NEXT_FRAME

    def _batch(self, listed, meta) -> str:
        attempt = meta.get("attempt", 0)
        out = []
        for f in listed:
            b = self._bundle(f)
            out.append(format_record(self._description(b, f.index), self._percent(b, f.index, b.v[f.index], "batch", attempt), task_level=True))
        return "\n".join(out)
