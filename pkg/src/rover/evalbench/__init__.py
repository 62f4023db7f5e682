"""Evaluation: progress metrics, frame-level reasoning judges, video QA, stratified reports."""

from .judge import JudgeResult, JudgeVerdict, RemoteJudge, RuleJudge, judge_frames
from .metrics import Correlation, frame_index_correlation, l2_distance, mean_se, pearson
from .qa import QA_TEMPLATES, QAItem, RemoteQA, RuleQA, answer_questions, build_qa_items, qa_metrics, questions_for
from .report import aggregate_report, context_bucket, evaluate_video, plot_data, write_report

__all__ = [
    "Correlation",
    "JudgeResult",
    "JudgeVerdict",
    "QAItem",
    "QA_TEMPLATES",
    "RemoteJudge",
    "RemoteQA",
    "RuleJudge",
    "RuleQA",
    "aggregate_report",
    "answer_questions",
    "build_qa_items",
    "context_bucket",
    "evaluate_video",
    "frame_index_correlation",
    "judge_frames",
    "l2_distance",
    "mean_se",
    "pearson",
    "plot_data",
    "qa_metrics",
    "questions_for",
    "write_report",
]
