"""Templated video question answering: "Did the robot {action}? If so, when?"."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import BackendError, MalformedOutput, SchemaError
from ..facts import event_fact, parse_facts
from ..trajgen.types import EventLog, TaskSpec

# reporting note carried with frame differences
FRAME_NOTE = "frame differences are in sampled frames; one second is roughly three frames"

# (action phrase, fact) templates per task group; both are str.format'ed with
# the task spec's ``names`` plus a few derived keys
QA_TEMPLATES: dict[str, tuple[tuple[str, str], ...]] = {
    "pick_and_place": (
        ("contact the {obj}", "contact:{obj_entity}"),
        ("pick up the {obj}", "grasp:{obj_entity}"),
        ("drop the {obj}", "drop:{obj_entity}"),
        ("place the {obj} in {target_location}", "place:{obj_entity}"),
    ),
    "open_close": (
        ("contact the {fixture} handle", "contact:{obj_entity}"),
        ("grasp the {fixture} handle", "grasp:{obj_entity}"),
        ("start {verb_ing} the {fixture}", "start_move:{obj_entity}"),
        ("completely {verb} the {fixture}", "place:{obj_entity}"),
    ),
    "appliances": (("press the {button}", "press:{obj_entity}"),),
    "toggle": (
        ("contact the {contact_target}", "contact:{obj_entity}"),
        ("start turning the {turn_target}", "start_move:{obj_entity}"),
        ("completely {complete}", "place:{obj_entity}"),
    ),
    "microwave_thawing": (
        ("open the microwave", "place:{door_entity}"),
        ("pick up the {obj}", "grasp:{obj_entity}"),
        ("drop the {obj}", "drop:{obj_entity}"),
        ("place the {obj} in the microwave", "place:{obj_entity}"),
    ),
    "restock_pantry": (
        ("pick up the {obj1}", "grasp:{obj1_entity}"),
        ("drop the {obj1}", "drop:{obj1_entity}"),
        ("place the {obj1} in the cabinet", "place:{obj1_entity}"),
        ("pick up the {obj2}", "grasp:{obj2_entity}"),
        ("drop the {obj2}", "drop:{obj2_entity}"),
        ("place the {obj2} in the cabinet", "place:{obj2_entity}"),
    ),
    "arrange_vegetables": (
        ("pick up the {vegetable1}", "grasp:{vegetable1_entity}"),
        ("drop the {vegetable1}", "drop:{vegetable1_entity}"),
        ("place the {vegetable1} on {target_location}", "place:{vegetable1_entity}"),
        ("pick up the {vegetable2}", "grasp:{vegetable2_entity}"),
        ("drop the {vegetable2}", "drop:{vegetable2_entity}"),
        ("place the {vegetable2} on {target_location}", "place:{vegetable2_entity}"),
    ),
    "prepare_coffee": (
        ("pick up the mug", "grasp:{obj_entity}"),
        ("drop the mug", "drop:{obj_entity}"),
        ("place the mug in the coffee machine", "place:{obj_entity}"),
        ("press the coffee machine start button", "press:{button_entity}"),
    ),
    "presoak_pan": (
        ("pick up the pan", "grasp:{pan_entity}"),
        ("drop the pan", "drop:{pan_entity}"),
        ("place the pan in the sink", "place:{pan_entity}"),
        ("pick up the sponge", "grasp:{sponge_entity}"),
        ("drop the sponge", "drop:{sponge_entity}"),
        ("place the sponge in the pan", "place:{sponge_entity}"),
        ("contact the sink handle", "contact:{handle_entity}"),
        ("turn on the sink", "place:{handle_entity}"),
    ),
}


@dataclass
class QAItem:
    question: str
    fact: str
    gt_occurred: bool
    gt_frame: int | None = None
    gt_timestep: int | None = None
    predicted_occurred: bool | None = None
    predicted_frame: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gt_occurred != (self.gt_frame is not None):
            raise ValueError("gt_frame must be present exactly when the event occurred")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "extra"}


def _names(spec: TaskSpec) -> dict:
    names = dict(spec.names)
    if "verb" in names:
        names["verb_ing"] = {"open": "opening", "close": "closing"}.get(names["verb"], names["verb"] + "ing")
    return names


def questions_for(spec: TaskSpec) -> list[tuple[str, str]]:
    if spec.task_group not in QA_TEMPLATES:
        raise SchemaError(f"no question templates for group {spec.task_group!r}")
    names = _names(spec)
    return [
        (f"Did the robot {action.format(**names)}? If so, when?", fact.format(**names))
        for action, fact in QA_TEMPLATES[spec.task_group]
    ]


def build_qa_items(spec: TaskSpec, log: EventLog, timesteps: list[int]) -> list[QAItem]:
    """Questions with ground truth. The answer frame is the first sampled frame
    at or after the event's timestep."""
    items = []
    for question, fact in questions_for(spec):
        ev = next((e for e in log.events if event_fact(e) == fact), None)
        frame = None
        if ev is not None:
            frame = next((i for i, t in enumerate(timesteps) if t >= ev.timestep), None)
        if frame is None:
            items.append(QAItem(question, fact, False))
        else:
            items.append(QAItem(question, fact, True, frame, ev.timestep))
    return items


class RuleQA:
    """Answers from canonical facts: the earliest frame whose description states the fact."""

    def answer(self, descriptions: list[str], item: QAItem) -> tuple[bool, int | None]:
        for i, d in enumerate(descriptions):
            if item.fact in parse_facts(d):
                return True, i
        return False, None


_QA_SYSTEM = (
    "You answer questions about a robot video from per-frame descriptions. "
    "Reply with two lines:\nANSWER: yes|no\nFRAME: <earliest frame number where it happens, or none>"
)


class RemoteQA:
    def __init__(self, gateway, temperature: float = 0.0):
        self.gateway = gateway
        self.temperature = temperature

    def answer(self, descriptions: list[str], item: QAItem) -> tuple[bool, int | None]:
        from ..engine.tokens import Text, TokenSeq
        from ..gateway.types import ModelRequest

        body = "\n".join(f"Frame {i}: {d}" for i, d in enumerate(descriptions))
        ctx = TokenSeq([Text(f"{body}\n\nQuestion: {item.question}")])
        resp = self.gateway.generate(ModelRequest(_QA_SYSTEM, ctx, 128, self.temperature, {"purpose": "qa"}))
        a = re.search(r"ANSWER:\s*(yes|no)", resp.text, re.I)
        if not a:
            raise MalformedOutput("QA reply lacks an ANSWER line", resp.text)
        if a.group(1).lower() == "no":
            return False, None
        f = re.search(r"FRAME:\s*(\d+)", resp.text)
        return True, int(f.group(1)) if f else None


def answer_questions(descriptions: list[str], items: list[QAItem], judge=None) -> list[QAItem]:
    judge = judge or RuleQA()
    out = []
    for it in items:
        new = QAItem(it.question, it.fact, it.gt_occurred, it.gt_frame, it.gt_timestep)
        try:
            new.predicted_occurred, new.predicted_frame = judge.answer(descriptions, it)
        except (BackendError, MalformedOutput) as e:
            new.extra["error"] = str(e)
        out.append(new)
    return out


def qa_metrics(items: list[QAItem]) -> dict:
    """Accuracy over answered items, precision/recall of the occurrence answers,
    and predicted-minus-true frame differences for true positives.

    Precision (recall) is 1.0 by convention when nothing was predicted
    (nothing occurred)."""
    answered = [i for i in items if i.predicted_occurred is not None]
    tp = sum(i.predicted_occurred and i.gt_occurred for i in answered)
    fp = sum(i.predicted_occurred and not i.gt_occurred for i in answered)
    fn = sum(not i.predicted_occurred and i.gt_occurred for i in answered)
    tn = sum(not i.predicted_occurred and not i.gt_occurred for i in answered)
    n = len(answered)
    diffs = [
        i.predicted_frame - i.gt_frame
        for i in answered
        if i.predicted_occurred and i.gt_occurred and i.predicted_frame is not None
    ]
    return {
        "accuracy": (tp + tn) / n if n else 0.0,
        "precision": tp / (tp + fp) if tp + fp else 1.0,
        "recall": tp / (tp + fn) if tp + fn else 1.0,
        "frame_diffs": diffs,
        "counts": {"tp": tp, "fp": fp, "fn": fn, "tn": tn, "unanswered": len(items) - n},
        "note": FRAME_NOTE,
    }
