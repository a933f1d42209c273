import numpy as np
import pytest

from gatedvigat.config import GateConfig, HeadConfig, RunConfig, SynthConfig
from gatedvigat.gating.gates import GateSchedule
from gatedvigat.gating.infer import infer_all
from gatedvigat.gating.train import train_gates
from gatedvigat.head.head import all_frames_scores
from gatedvigat.head.train import train_head
from gatedvigat.pipeline.metrics import top1
from gatedvigat.pipeline.report import build_report
from gatedvigat.pipeline.synth import synth_from_config


@pytest.mark.slow
def test_planted_dataset_end_to_end():
    # G=4, N=400, P=30, F=64, K=8, easy 70%, gate 40 epoch / lr 1e-4 (x0.1 at 16, 35)
    cfg = RunConfig(
        seed=0, num_classes=4, feature_dim=64, num_objects=8,
        head=HeadConfig(epochs=30, lr=1e-2, batch_size=16),
        gates=GateConfig(schedule=[2, 4, 6, 8, 10], epochs=40, lr=1e-4, lr_milestones=[16, 35], batch_size=8),
        synth=SynthConfig(num_videos=400, num_frames=30, difficulty_mix=0.3),
    )
    data = synth_from_config(cfg)
    head = train_head(data, cfg)
    schedule = GateSchedule.from_config(cfg.gates)
    gates = train_gates(head, data, schedule, cfg)
    records = infer_all(head, gates, schedule, data)

    labels = [r.labels for r in data]
    all_frames = top1(np.vstack([all_frames_scores(head, r.global_feats, r.object_feats) for r in data]), labels)
    report = build_report(records, schedule, "single", all_frames_metric=all_frames)

    assert report.overall_metric >= all_frames - 0.02
    assert report.avg_frames <= 0.5 * schedule.q[-1]
    easy = report.per_difficulty["easy"]["avg_exit_gate"]
    hard = report.per_difficulty["hard"]["avg_exit_gate"]
    assert easy < hard
    assert report.cost["ratio_total"] > 1.0

    again = infer_all(head, gates, schedule, data)
    assert [r.to_dict() for r in again] == [r.to_dict() for r in records]
