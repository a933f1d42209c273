from __future__ import annotations

from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from gatedvigat.config import RunConfig
from gatedvigat.errors import EmptyInputError, ShapeError
from gatedvigat.head.head import HeadParams, classification_loss, forward_logits
from gatedvigat.numkernel import ops
from gatedvigat.numkernel.optim import StepSchedule, make_optimizer, minibatches
from gatedvigat.numkernel.tape import Tape, grad
from gatedvigat.pipeline.records import VideoRecord


def _group_by_shape(dataset: Sequence[VideoRecord], idxs: Sequence[int]) -> "OrderedDict[Tuple[int, int], List[int]]":
    # 같은 (P, K)끼리 묶어 한 번에 배치 forward
    groups: "OrderedDict[Tuple[int, int], List[int]]" = OrderedDict()
    for i in idxs:
        rec = dataset[int(i)]
        groups.setdefault((rec.num_frames, rec.num_objects), []).append(int(i))
    return groups


def batch_loss(p: Dict, dataset: Sequence[VideoRecord], idxs: Sequence[int], label_mode: str):
    """minibatch 평균 분류 손실 (p가 Var dict이면 Tape에 기록)."""
    total = None
    n = len(idxs)
    for _, members in _group_by_shape(dataset, idxs).items():
        gamma = np.stack([dataset[i].global_feats for i in members])
        objects = np.stack([dataset[i].object_feats for i in members])
        logits = forward_logits(p, gamma, objects)
        part = ops.mul(classification_loss(logits, [dataset[i].labels for i in members], label_mode), len(members) / n)
        total = part if total is None else ops.add(total, part)
    return total


def train_head(dataset: Sequence[VideoRecord], config: RunConfig, history: Optional[List[float]] = None) -> HeadParams:
    """
    게이트 없이 모든 P 프레임으로 head를 학습한다.
    - seed가 같으면 초기화, 셔플 순서, 결과 파라미터가 모두 동일
    - history가 주어지면 epoch별 평균 손실을 append
    """
    if not dataset:
        raise EmptyInputError("train_head: empty dataset")
    f = dataset[0].feature_dim
    for rec in dataset:
        if rec.feature_dim != f:
            raise ShapeError(f"train_head: video {rec.video_id} has F={rec.feature_dim}, expected {f}")

    hc = config.head
    params = HeadParams.init(f, config.num_classes, config.seed, config.label_mode)
    flat = {k: np.array(v, dtype=np.float64) for k, v in params.flat().items()}
    opt = make_optimizer(hc.optimizer, flat)
    schedule = StepSchedule(hc.lr, tuple(hc.lr_milestones), hc.lr_gamma)
    rng = np.random.default_rng(config.seed + 1)
    n = len(dataset)

    logger.info(
        f"[train_head] videos={n} F={f} G={config.num_classes} mode={config.label_mode} "
        f"epochs={hc.epochs} optimizer={hc.optimizer}"
    )
    for epoch in range(hc.epochs):
        lr = schedule.lr_at(epoch)
        epoch_loss = 0.0
        for idxs in minibatches(n, hc.batch_size, rng):
            tape = Tape()
            leaves = tape.leaves(flat)
            loss = batch_loss(leaves, dataset, idxs, config.label_mode)
            opt.step(grad(tape, loss).of(leaves), lr)
            epoch_loss += float(loss.value) * len(idxs)
        epoch_loss /= n
        if history is not None:
            history.append(epoch_loss)
        logger.debug(f"[train_head] epoch={epoch} loss={epoch_loss:.4f} lr={lr:g}")

    logger.info(f"[train_head] done loss={epoch_loss:.4f}")
    return HeadParams.from_flat(flat, label_mode=config.label_mode, seed=config.seed)
