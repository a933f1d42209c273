from __future__ import annotations

from typing import Sequence

import numpy as np
from loguru import logger

from gatedvigat.config import LabelMode
from gatedvigat.errors import EmptyInputError, ModeError, ShapeError


def _scores(predictions, n: int) -> np.ndarray:
    if n == 0:
        raise EmptyInputError("no videos to evaluate")
    s = np.asarray(predictions, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != n:
        raise ShapeError(f"scores must be N×G with N={n}, got shape={s.shape}")
    return s


def top1(predictions, labels: Sequence[Sequence[int]]) -> float:
    """argmax 점수 == 정답 라벨인 비율 (single-label 전용)."""
    s = _scores(predictions, len(labels))
    if any(len(labs) != 1 for labs in labels):
        raise ModeError("top1 needs exactly one label per video (single-label mode)")
    truth = np.array([int(labs[0]) for labs in labels])
    return float(np.mean(np.argmax(s, axis=1) == truth))


def average_precision(class_scores: np.ndarray, positives: np.ndarray) -> float:
    # 점수 내림차순, 동점은 작은 비디오 인덱스 먼저
    order = np.lexsort((np.arange(len(class_scores)), -class_scores))
    hits = positives[order]
    ranks = np.flatnonzero(hits) + 1
    precisions = np.arange(1, len(ranks) + 1) / ranks
    return float(precisions.mean())


def mean_ap(scores, labels: Sequence[Sequence[int]]) -> float:
    s = _scores(scores, len(labels))
    n, g = s.shape
    truth = np.zeros((n, g), dtype=bool)
    for i, labs in enumerate(labels):
        for c in labs:
            if not 0 <= int(c) < g:
                raise IndexError(f"label {c} out of range for {g} classes")
            truth[i, int(c)] = True

    aps = []
    skipped = []
    for c in range(g):
        if not truth[:, c].any():
            skipped.append(c)
            continue
        aps.append(average_precision(s[:, c], truth[:, c]))
    if skipped:
        logger.warning(f"[metrics] classes without positives excluded from mAP: {skipped}")
    if not aps:
        raise EmptyInputError("mean_ap: no class has a positive example")
    return float(np.mean(aps))


def metric_for(label_mode: LabelMode, scores, labels: Sequence[Sequence[int]]) -> float:
    """데이터셋 모드에 맞는 지표: single → top-1, multi → mAP."""
    if label_mode == "multi":
        return mean_ap(scores, labels)
    return top1(scores, labels)


def metric_name(label_mode: LabelMode) -> str:
    return "mAP" if label_mode == "multi" else "top1"
