"""Synthetic expert demonstrations, deviation/recovery, events and levels."""

from .catalog import build_catalog, catalog_by_id
from .dataset import Video, generate_video, plan_for_level, video_ids, video_seed
from .deviation import assemble_nonexpert, inject_deviation, recover_interpolate
from .events import detect_events
from .expert import synth_expert_demo
from .frames import downsample_frames
from .kinematics import DEFAULT_CONFIG, GenConfig
from .levels import LEVEL_COUNTS, LEVEL_LABELS, MILESTONES, assign_level, n_levels
from .types import (
    TERMINATE,
    Action,
    Branch,
    DeviationPlan,
    EndPredicate,
    EnvState,
    Event,
    EventLog,
    Provenance,
    Step,
    SubtaskSpec,
    TaskSpec,
    Trajectory,
)
