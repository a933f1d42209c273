import numpy as np
import pytest

from gatedvigat.config import CostConfig
from gatedvigat.gating.infer import ExitRecord
from gatedvigat.pipeline.cost import CostBreakdown, CostModel, account_cost, baseline_cost, gated_cost, total_cost


def _record(frames, exit_gate, p=30, k=50):
    return ExitRecord(
        video_id="v", exit_gate=exit_gate, frames_used=tuple(range(frames)), scores=np.ones(2) / 2,
        gate_outputs=(0.9,) * exit_gate, cost_units=0.0, num_frames=p, num_objects=k,
    )


def test_defaults_match_config():
    assert CostModel.from_config(CostConfig()) == CostModel()


def test_local_branch_dominates_head_and_gate():
    m = CostModel()
    assert m.local_frame_cost(8) > 100 * (m.cost_head_block + m.cost_gate)


def test_all_frames_without_gate_cost_equals_baseline():
    m = CostModel(cost_gate=0.0)
    assert gated_cost(m, 30, 50, 30, 1).total == pytest.approx(baseline_cost(m, 30, 50).total)


def test_account_cost_uses_record_fields():
    m = CostModel()
    got = account_cost(m, _record(7, 3), 30, 50)
    assert got == gated_cost(m, 30, 50, 7, 3)
    assert got.heavy == pytest.approx(30 * 24.4 + 7 * (246.0 + 50 * 17.5))
    assert got.head == pytest.approx(0.05 * 9)
    assert got.gate == pytest.approx(3 * 0.01 + 2 * 0.05)


@pytest.mark.parametrize(
    "p, frames, exit_gate, expected",
    [(30, 7, 3, 34.4 / 8.7), (120, 20, 4, 137.4 / 24.8)],
)
def test_cost_ratios_reproduce_reference_configurations(p, frames, exit_gate, expected):
    m = CostModel()
    ratio = baseline_cost(m, p, 50).total / gated_cost(m, p, 50, frames, exit_gate).total
    assert ratio == pytest.approx(expected, rel=0.10)
    heavy_ratio = baseline_cost(m, p, 50).heavy / gated_cost(m, p, 50, frames, exit_gate).heavy
    assert heavy_ratio == pytest.approx(expected, rel=0.10)


def test_gated_total_bounded_by_baseline_plus_gates():
    m = CostModel()
    for frames in range(1, 31):
        for s in range(1, 6):
            c = gated_cost(m, 30, 50, frames, s)
            assert c.total <= baseline_cost(m, 30, 50).total + c.gate + 1e-9


def test_total_cost_sums_parts():
    parts = [CostBreakdown(1.0, 2.0, 3.0), CostBreakdown(0.5, 0.25, 0.125)]
    acc = total_cost(parts)
    assert (acc.heavy, acc.head, acc.gate) == (1.5, 2.25, 3.125)
    assert acc.total == pytest.approx(6.875)
    assert total_cost([]).total == 0.0
