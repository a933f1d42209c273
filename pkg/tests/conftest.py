from __future__ import annotations

from typing import Callable, List

import numpy as np
import pytest
from loguru import logger

from gatedvigat.config import AblationConfig, GateConfig, HeadConfig, RunConfig, SynthConfig
from gatedvigat.gating.gates import GateParams, GateSchedule
from gatedvigat.head.head import HeadParams
from gatedvigat.head.train import train_head
from gatedvigat.pipeline.synth import synth_from_config


def numeric_grad(f: Callable[[], float], arr: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """arr를 제자리에서 흔들어 central difference gradient를 구한다."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = arr[idx]
        arr[idx] = old + h
        up = f()
        arr[idx] = old - h
        down = f()
        arr[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1e-4, np.abs(a) + np.abs(b))))


@pytest.fixture
def tiny_config() -> RunConfig:
    return RunConfig(
        seed=3,
        num_classes=2,
        feature_dim=8,
        num_objects=3,
        head=HeadConfig(epochs=3, lr=1e-2, batch_size=4),
        gates=GateConfig(schedule=[2, 4], epochs=2, lr=1e-3, lr_milestones=[1], batch_size=4),
        synth=SynthConfig(num_videos=12, num_frames=6, difficulty_mix=0.5),
        ablation=AblationConfig(budgets=[2, 6], beta_grid=[]),
    )


@pytest.fixture
def tiny_dataset(tiny_config):
    return synth_from_config(tiny_config)


@pytest.fixture
def tiny_head(tiny_config) -> HeadParams:
    return HeadParams.init(tiny_config.feature_dim, tiny_config.num_classes, seed=tiny_config.seed)


@pytest.fixture
def tiny_schedule(tiny_config) -> GateSchedule:
    return GateSchedule.from_config(tiny_config.gates)


@pytest.fixture
def tiny_gates(tiny_config, tiny_schedule) -> List[GateParams]:
    rng = np.random.default_rng(11)
    return [GateParams.init(tiny_config.feature_dim, s, rng) for s in range(1, tiny_schedule.num_gates + 1)]


@pytest.fixture
def loguru_messages():
    """loguru 경고를 리스트로 수집."""
    messages: List[str] = []
    sink_id = logger.add(lambda m: messages.append(str(m)), level="WARNING", format="{message}")
    yield messages
    logger.remove(sink_id)


@pytest.fixture(scope="session")
def hard_planted():
    """전부 hard인 planted 데이터셋과 그 위에서 학습한 head. slow 테스트끼리 공유한다."""
    cfg = RunConfig(
        seed=5,
        num_classes=4,
        feature_dim=32,
        num_objects=8,
        head=HeadConfig(epochs=30, lr=1e-2, batch_size=16),
        synth=SynthConfig(num_videos=240, num_frames=30, difficulty_mix=1.0),
    )
    data = synth_from_config(cfg)
    return cfg, data, train_head(data, cfg)
