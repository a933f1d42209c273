import csv

import pytest
from pydantic import ValidationError

from gatedvigat.config import AblationConfig
from gatedvigat.errors import InvalidInputError
from gatedvigat.gating.gates import GateSchedule
from gatedvigat.pipeline.ablation import FRAME_EXIT, GATED, ablation_run, policy_scores, write_ablation
from gatedvigat.policy import PolicyKind, PolicyVariant

NON_GATED = ["random", "wid_topk", "random_local", "wid_local", "proposed"]


def test_full_budget_policies_agree(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset):
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config, policies=NON_GATED, budgets=[6])
    metrics = [table.get(p, 6).metric for p in NON_GATED]
    assert all(m == pytest.approx(metrics[0], abs=1e-12) for m in metrics)
    assert all(table.get(p, 6).avg_frames == 6 for p in NON_GATED)


def test_full_budget_scores_match_across_orders(tiny_head, tiny_dataset):
    rec = tiny_dataset[0]
    ref, _ = policy_scores(tiny_head, rec, PolicyKind(PolicyVariant.PROPOSED), 6, seed=0)
    for variant in PolicyVariant:
        got, frames = policy_scores(tiny_head, rec, PolicyKind(variant), 6, seed=3)
        assert sorted(frames) == list(range(6))
        assert got == pytest.approx(ref, abs=1e-9)


def test_table_shape_and_empty_frame_exit_row(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset):
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config)
    assert table.budgets == [2, 6]
    assert table.policies() == list(tiny_config.ablation.policies) + [FRAME_EXIT]
    for b in table.budgets:
        assert table.get(FRAME_EXIT, b).metric is None
        cell = table.get("random", b)
        assert cell.avg_frames == b
        assert 0.0 <= cell.metric <= 1.0
    with pytest.raises(KeyError):
        table.get("random", 99)


def test_gated_row_without_grid_uses_given_gates(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset):
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config, policies=[GATED], budgets=[2, 4])
    a, b = table.get(GATED, 2), table.get(GATED, 4)
    assert a.beta is None
    assert a.avg_frames == b.avg_frames
    assert 2 <= a.avg_frames <= 4
    assert a.within_tolerance == (abs(a.avg_frames - 2) <= tiny_config.ablation.frame_tolerance)


def test_gated_row_sweeps_beta_grid(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset):
    cfg = tiny_config.model_copy(update={"ablation": AblationConfig(budgets=[2, 4], beta_grid=[0.05, 50.0])})
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, cfg, policies=[GATED])
    for b in (2, 4):
        assert table.get(GATED, b).beta in (0.05, 50.0)


def test_budget_above_frames_is_clamped(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset, loguru_messages):
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config, policies=["wid_topk"], budgets=[9])
    assert table.get("wid_topk", 9).avg_frames == 6
    assert any("clamped" in m for m in loguru_messages)


def test_write_ablation(tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset, tmp_path):
    table = ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config, policies=["proposed"], budgets=[2])
    write_ablation(table, str(tmp_path))
    with (tmp_path / "ablation.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["policy", "2"]
    assert rows[1][0] == "proposed" and rows[1][1] != ""
    assert rows[2] == [FRAME_EXIT, ""]
    assert (tmp_path / "ablation.json").exists()


@pytest.mark.parametrize("budgets", [[0], [2, 0], [-3]])
def test_nonpositive_budget_is_rejected(budgets, tiny_head, tiny_gates, tiny_schedule, tiny_config, tiny_dataset):
    with pytest.raises(ValidationError):
        AblationConfig(budgets=budgets)
    with pytest.raises(InvalidInputError):
        ablation_run(tiny_dataset, tiny_head, tiny_gates, tiny_schedule, tiny_config, policies=["random"], budgets=budgets)


@pytest.mark.slow
def test_policy_ordering_on_hard_videos(hard_planted):
    cfg, data, head = hard_planted
    table = ablation_run(data, head, [], GateSchedule(q=(4,)), cfg, policies=["random", "wid_topk", "proposed"], budgets=[3, 4])
    random_, topk, proposed = (table.get(p, 4).metric for p in ("random", "wid_topk", "proposed"))
    assert proposed >= topk >= random_
    assert proposed - random_ >= 0.2
    # 같은 shot의 프레임만 고르면 정답이 다른 클래스와 동률로 남는다
    assert table.get("proposed", 3).metric >= table.get("wid_topk", 3).metric
