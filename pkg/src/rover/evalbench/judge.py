"""Frame-level reasoning judges."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..errors import BackendError, MalformedOutput
from ..facts import parse_facts

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class JudgeVerdict:
    has_true_statement: bool
    has_false_statement: bool
    rationale: str = ""


@dataclass
class JudgeResult:
    error_rate: float
    success_rate: float
    verdicts: list  # JudgeVerdict or None for unevaluated frames
    unevaluated: int = 0

    def to_dict(self) -> dict:
        return {
            "error_rate": self.error_rate,
            "success_rate": self.success_rate,
            "unevaluated": self.unevaluated,
            "verdicts": [None if v is None else v.__dict__ for v in self.verdicts],
        }


class RuleJudge:
    """Matches canonical facts in a description against the frame's true fact set.

    Free text that is not a ``kind:subject`` fact is neither true nor false.
    """

    def verdict(self, description: str, true_facts) -> JudgeVerdict:
        stated = parse_facts(description)
        true = sorted(stated & set(true_facts))
        false = sorted(stated - set(true_facts))
        return JudgeVerdict(bool(true), bool(false), f"true={true} false={false}")


_JUDGE_SYSTEM = (
    "You check a robot video frame description against ground-truth information about the same frame. "
    "Answer with two lines:\nTRUE: yes|no (the description states something verifiably true)\n"
    "FALSE: yes|no (the description states something verifiably false)\nREASON: one sentence"
)


class RemoteJudge:
    """Model-backed judge through a gateway (``generate(request)``)."""

    def __init__(self, gateway, temperature: float = 0.0):
        self.gateway = gateway
        self.temperature = temperature

    def verdict(self, description: str, true_facts) -> JudgeVerdict:
        from ..engine.tokens import Text, TokenSeq
        from ..gateway.types import ModelRequest

        ctx = TokenSeq([Text(f"Ground truth: {', '.join(sorted(true_facts))}\nDescription: {description}")])
        resp = self.gateway.generate(ModelRequest(_JUDGE_SYSTEM, ctx, 256, self.temperature, {"purpose": "judge"}))
        t = re.search(r"TRUE:\s*(yes|no)", resp.text, re.I)
        f = re.search(r"FALSE:\s*(yes|no)", resp.text, re.I)
        if not t or not f:
            raise MalformedOutput("judge reply lacks TRUE/FALSE lines", resp.text)
        return JudgeVerdict(t.group(1).lower() == "yes", f.group(1).lower() == "yes", resp.text.strip())


def judge_frames(descriptions, gt_fact_sets, judge=None) -> JudgeResult:
    """Error rate = share of judged frames with a false statement; success rate =
    share with a true statement and no false one. Frames the judge cannot
    handle are excluded and counted."""
    if len(descriptions) != len(gt_fact_sets):
        raise ValueError("one description per frame is required")
    judge = judge or RuleJudge()
    verdicts = []
    for d, gt in zip(descriptions, gt_fact_sets):
        try:
            verdicts.append(judge.verdict(d, gt))
        except (BackendError, MalformedOutput) as e:
            log.warning("judge failed on a frame: %s", e)
            verdicts.append(None)
    judged = [v for v in verdicts if v is not None]
    n = len(judged)
    if n == 0:
        return JudgeResult(0.0, 0.0, verdicts, len(verdicts))
    err = sum(v.has_false_statement for v in judged) / n
    ok = sum(v.has_true_statement and not v.has_false_statement for v in judged) / n
    return JudgeResult(err, ok, verdicts, len(verdicts) - n)
