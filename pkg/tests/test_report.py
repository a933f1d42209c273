import csv
import json

import numpy as np
import pytest

from gatedvigat.errors import EmptyInputError, InvalidInputError
from gatedvigat.gating.infer import infer_all
from gatedvigat.pipeline.cost import CostModel
from gatedvigat.pipeline.report import build_report, read_exit_records, write_exit_records, write_report


@pytest.fixture
def exit_records(tiny_head, tiny_gates, tiny_schedule, tiny_dataset):
    return infer_all(tiny_head, tiny_gates, tiny_schedule, tiny_dataset)


def test_per_gate_counts_and_averages(exit_records, tiny_schedule):
    report = build_report(exit_records, tiny_schedule, "single")
    assert report.num_videos == len(exit_records)
    assert sum(g.videos for g in report.per_gate) == len(exit_records)
    assert [g.q for g in report.per_gate] == list(tiny_schedule.q)
    assert report.avg_frames == pytest.approx(np.mean([len(r.frames_used) for r in exit_records]))
    assert report.avg_exit_gate == pytest.approx(np.mean([r.exit_gate for r in exit_records]))
    for g in report.per_gate:
        if g.videos:
            assert g.avg_frames == g.q
        else:
            assert g.metric is None
    assert report.metric_name == "top1"


def test_cost_summary(exit_records, tiny_schedule):
    report = build_report(exit_records, tiny_schedule, "single", cost_model=CostModel())
    c = report.cost
    assert c["gated_total"] == pytest.approx(sum(r.cost_units for r in exit_records))
    assert c["ratio_total"] == pytest.approx(c["baseline_total"] / c["gated_total"])
    assert c["ratio_heavy"] > 1.0
    assert c["gated_total"] <= c["baseline_total"] + c["gated_gate"]


def test_per_difficulty_breakdown(exit_records, tiny_schedule, tiny_dataset):
    report = build_report(exit_records, tiny_schedule, "single")
    tags = {r.difficulty for r in tiny_dataset}
    assert set(report.per_difficulty) == tags
    assert sum(v["videos"] for v in report.per_difficulty.values()) == len(tiny_dataset)


def test_report_json_is_reproducible(exit_records, tiny_schedule, tmp_path):
    a = build_report(exit_records, tiny_schedule, "single", all_frames_metric=0.5, config_hash="abc")
    b = build_report(exit_records, tiny_schedule, "single", all_frames_metric=0.5, config_hash="abc")
    assert a.to_json() == b.to_json()

    write_report(a, str(tmp_path))
    loaded = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert loaded["config_hash"] == "abc"
    assert loaded["all_frames_metric"] == 0.5
    with (tmp_path / "per_gate.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["gate", "q", "videos", "avg_frames", "metric"]
    assert len(rows) == 1 + len(tiny_schedule.q)


def test_empty_records(tiny_schedule):
    with pytest.raises(EmptyInputError):
        build_report([], tiny_schedule, "single")


def test_exit_records_file_round_trip(exit_records, tmp_path):
    path = write_exit_records(exit_records, str(tmp_path / "run" / "exits.jsonl"))
    back = read_exit_records(str(path))
    assert [r.video_id for r in back] == [r.video_id for r in exit_records]
    assert all(np.array_equal(a.scores, b.scores) for a, b in zip(exit_records, back))


def test_read_exit_records_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_exit_records(str(tmp_path / "missing.jsonl"))
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"video_id": "v"}\n', encoding="utf-8")
    with pytest.raises(InvalidInputError):
        read_exit_records(str(bad))
