"""
Planted 합성 데이터셋.

- 클래스마다 단위 event 방향(서로 직교), 배경/cue/shot 방향도 이들과 직교
- easy 비디오: 대부분의 프레임 global 특징에 event 방향, 첫 게이트의 δ만으로 분류된다
- hard 비디오: global 특징에는 클래스 정보가 없다. event 프레임은 HARD_SHOTS개 shot으로 나뉘고
  global 특징에는 공통 cue + shot 방향만 있다
- hard의 salient 객체는 정답 클래스와 나머지 클래스 대부분을 함께 보여준다. 나머지 클래스는
  각각 정확히 한 shot에서만 빠지므로, 모든 shot의 프레임을 봐야 정답이 유일한 최대가 된다
- 객체 특징 = 프레임 특징 + 객체별 잡음, event 프레임마다 salient 객체 1개
모든 값은 float32로 한 번 반올림해 두어 특징 파일 round-trip이 비트 단위로 같다.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from gatedvigat.config import LabelMode, RunConfig
from gatedvigat.errors import InvalidInputError
from gatedvigat.pipeline.records import VideoRecord

EASY_EVENT_FRACTION = 0.7
HARD_SHOTS = 3
HARD_SHOT_FRAMES = 3
HARD_EVENT_FRAMES = HARD_SHOTS * HARD_SHOT_FRAMES


@dataclass(frozen=True)
class _Basis:
    dirs: np.ndarray  # G×F
    background: np.ndarray
    cue: np.ndarray
    shots: np.ndarray  # HARD_SHOTS×F


def _f32(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float32).astype(np.float64)


def _basis(rng: np.random.Generator, num_classes: int, feature_dim: int) -> _Basis:
    g = num_classes
    q, _ = np.linalg.qr(rng.standard_normal((feature_dim, g + 2 + HARD_SHOTS)))
    return _Basis(dirs=q[:, :g].T, background=q[:, g], cue=q[:, g + 1], shots=q[:, g + 2:].T)


def class_directions(num_classes: int, feature_dim: int, seed: int) -> np.ndarray:
    """synth_dataset(seed)가 쓰는 G×F event 방향 (행마다 단위 벡터)."""
    return _basis(np.random.default_rng(seed), num_classes, feature_dim).dirs


def shown_classes(labels: Sequence[int], num_classes: int, rng: np.random.Generator) -> List[List[int]]:
    """
    hard 비디오의 shot별 salient 객체가 보여주는 클래스 목록.
    정답이 아닌 클래스는 섞은 뒤 round-robin으로 한 shot에서만 빠진다.
    """
    others = [c for c in range(num_classes) if c not in labels]
    order = [others[i] for i in rng.permutation(len(others))]
    return [list(labels) + [c for j, c in enumerate(order) if j % HARD_SHOTS != k] for k in range(HARD_SHOTS)]


def _validate_counts(**counts: int) -> None:
    for name, value in counts.items():
        if int(value) < 1:
            raise InvalidInputError(f"synth: {name} must be >= 1, got {value}")


def synth_dataset(
    num_classes: int,
    num_videos: int,
    num_frames: int,
    feature_dim: int,
    num_objects: int,
    difficulty_mix: float,
    seed: int,
    label_mode: LabelMode = "single",
    event_amplitude: float = 1.5,
    object_amplitude: float = 2.0,
    noise: float = 0.1,
    second_label_prob: float = 0.3,
) -> List[VideoRecord]:
    _validate_counts(num_classes=num_classes, num_videos=num_videos, num_frames=num_frames,
                     feature_dim=feature_dim, num_objects=num_objects)
    if not 0.0 <= difficulty_mix <= 1.0:
        raise InvalidInputError(f"synth: difficulty_mix must be in [0, 1], got {difficulty_mix}")
    if feature_dim < num_classes + 2 + HARD_SHOTS:
        raise InvalidInputError(f"synth: need F >= G + {2 + HARD_SHOTS} orthogonal directions (G={num_classes}, F={feature_dim})")

    rng = np.random.default_rng(seed)
    basis = _basis(rng, num_classes, feature_dim)
    p, f, k = num_frames, feature_dim, num_objects
    records: List[VideoRecord] = []

    for i in range(num_videos):
        labels = [i % num_classes]
        if label_mode == "multi" and num_classes > 1 and rng.random() < second_label_prob:
            other = int(rng.integers(num_classes - 1))
            labels.append(other if other < labels[0] else other + 1)
        hard = rng.random() < difficulty_mix
        n_event = min(p, HARD_EVENT_FRAMES) if hard else max(1, int(math.ceil(EASY_EVENT_FRACTION * p)))
        # hard는 뽑힌 순서대로 shot 0,1,2,0,1,2,...
        event_frames = rng.choice(p, size=n_event, replace=False)
        shot_of = np.arange(n_event) % HARD_SHOTS

        frames = basis.background + noise * rng.standard_normal((p, f))
        if hard:
            for s in range(HARD_SHOTS):
                frames[event_frames[shot_of == s]] += event_amplitude * (basis.cue + basis.shots[s])
            shown = shown_classes(labels, num_classes, rng)
        else:
            frames[event_frames] += event_amplitude * basis.dirs[labels].sum(axis=0)
            shown = [labels[:1]] * HARD_SHOTS

        objects = frames[:, None, :] + noise * 3.0 * rng.standard_normal((p, k, f))
        docs = -np.sort(-rng.uniform(0.05, 1.0, size=(p, k)), axis=1)
        names = [["clutter"] * k for _ in range(p)]
        for t, s in zip(event_frames, shot_of):
            slot = int(rng.integers(k))
            objects[t, slot] += object_amplitude * basis.dirs[shown[s]].sum(axis=0)
            names[t][slot] = f"event:{labels[0]}"
        corners = rng.uniform(0.0, 0.5, size=(p, k, 2))
        sizes = rng.uniform(0.1, 0.5, size=(p, k, 2))
        boxes = np.concatenate([corners, corners + sizes], axis=-1)

        records.append(
            VideoRecord(
                video_id=f"v{i:05d}",
                labels=tuple(labels),
                global_feats=_f32(frames),
                object_feats=_f32(objects),
                object_docs=_f32(docs),
                object_names=names,
                object_boxes=_f32(boxes),
                tags={"difficulty": "hard" if hard else "easy"},
            )
        )

    n_hard = sum(1 for r in records if r.difficulty == "hard")
    logger.info(f"[synth] videos={num_videos} G={num_classes} P={p} F={f} K={k} hard={n_hard} seed={seed}")
    return records


def synth_from_config(cfg: RunConfig, seed: Optional[int] = None) -> List[VideoRecord]:
    sc = cfg.synth
    return synth_dataset(
        num_classes=cfg.num_classes,
        num_videos=sc.num_videos,
        num_frames=sc.num_frames,
        feature_dim=cfg.feature_dim,
        num_objects=cfg.num_objects,
        difficulty_mix=sc.difficulty_mix,
        seed=cfg.seed if seed is None else seed,
        label_mode=cfg.label_mode,
        event_amplitude=sc.event_amplitude,
        object_amplitude=sc.object_amplitude,
        noise=sc.noise,
        second_label_prob=sc.second_label_prob,
    )
