import numpy as np
import pytest

from gatedvigat.errors import InvalidInputError
from gatedvigat.pipeline.records import validate_record
from gatedvigat.pipeline.synth import HARD_EVENT_FRAMES, HARD_SHOTS, class_directions, shown_classes, synth_dataset


def _make(**kw):
    args = dict(num_classes=3, num_videos=12, num_frames=8, feature_dim=8, num_objects=3,
                difficulty_mix=0.5, seed=4)
    args.update(kw)
    return synth_dataset(**args)


def test_same_seed_is_identical():
    a, b = _make(), _make()
    for x, y in zip(a, b):
        assert x.video_id == y.video_id and x.labels == y.labels
        assert np.array_equal(x.global_feats, y.global_feats)
        assert np.array_equal(x.object_feats, y.object_feats)
        assert x.object_names == y.object_names
        assert x.tags == y.tags


def test_different_seed_differs():
    assert not np.array_equal(_make(seed=1)[0].global_feats, _make(seed=2)[0].global_feats)


@pytest.mark.parametrize(
    "kw",
    [dict(num_videos=0), dict(num_frames=0), dict(num_objects=0), dict(num_classes=0),
     dict(difficulty_mix=1.5), dict(num_classes=7, feature_dim=8)],
)
def test_invalid_arguments(kw):
    with pytest.raises(InvalidInputError):
        _make(**kw)


def test_records_are_valid_and_float32_exact():
    for rec in _make():
        validate_record(rec, "single", num_classes=3)
        for arr in (rec.global_feats, rec.object_feats, rec.object_docs, rec.object_boxes):
            assert np.array_equal(arr.astype(np.float32).astype(np.float64), arr)
        assert rec.object_boxes.shape == (8, 3, 4)


def test_labels_cycle_over_classes():
    data = _make()
    assert [r.labels for r in data] == [(i % 3,) for i in range(12)]
    assert [r.video_id for r in data][:2] == ["v00000", "v00001"]


def test_multilabel_mode_adds_distinct_second_labels():
    data = _make(label_mode="multi", second_label_prob=1.0)
    for i, rec in enumerate(data):
        assert rec.labels[0] == i % 3
        assert len(rec.labels) == 2 and len(set(rec.labels)) == 2
        validate_record(rec, "multi", num_classes=3)


def test_difficulty_mix_extremes():
    assert {r.difficulty for r in _make(difficulty_mix=0.0)} == {"easy"}
    assert {r.difficulty for r in _make(difficulty_mix=1.0)} == {"hard"}


def test_salient_object_per_event_frame():
    for rec in _make(difficulty_mix=1.0):
        names = rec.object_names
        salient = [(t, j) for t, row in enumerate(names) for j, n in enumerate(row) if n != "clutter"]
        assert len(salient) == min(rec.num_frames, HARD_EVENT_FRAMES)
        assert len({t for t, _ in salient}) == len(salient)
        assert all(names[t][j] == f"event:{rec.labels[0]}" for t, j in salient)


def _counts(shots, num_classes):
    return np.bincount([c for shot in shots for c in shot], minlength=num_classes)


def test_shown_classes_need_every_shot():
    rng = np.random.default_rng(0)
    for label in range(4):
        shots = shown_classes([label], 4, rng)
        assert len(shots) == HARD_SHOTS
        # 한 shot이나 두 shot만으로는 정답과 같은 횟수의 다른 클래스가 남는다
        for shot in shots:
            assert label in shot and len(shot) == 3
        for a in range(HARD_SHOTS):
            for b in range(a + 1, HARD_SHOTS):
                counts = _counts([shots[a], shots[b]], 4)
                assert counts.max() == counts[label] and (counts == counts[label]).sum() == 2
        counts = _counts(shots, 4)
        assert np.argmax(counts) == label and (counts == counts[label]).sum() == 1


def test_shown_classes_small_class_counts():
    rng = np.random.default_rng(1)
    assert shown_classes([0], 1, rng) == [[0]] * HARD_SHOTS
    two = shown_classes([1], 2, rng)
    assert two[0] == [1] and two[1] == two[2] == [1, 0]


def _separable_set(num_classes):
    data = synth_dataset(num_classes=num_classes, num_videos=40, num_frames=9, feature_dim=12, num_objects=2,
                         difficulty_mix=0.5, seed=9, noise=0.05)
    dirs = class_directions(num_classes, 12, seed=9)
    assert np.allclose(dirs @ dirs.T, np.eye(num_classes), atol=1e-12)
    return data, dirs


@pytest.mark.parametrize("num_classes", [2, 4])
def test_mean_object_features_are_linearly_separable(num_classes):
    data, dirs = _separable_set(num_classes)
    pred = [int(np.argmax(dirs @ r.object_feats.mean(axis=(0, 1)))) for r in data]
    assert pred == [r.labels[0] for r in data]


def test_hard_videos_keep_class_out_of_global_features():
    data, dirs = _separable_set(4)
    hard = [r for r in data if r.difficulty == "hard"]
    easy = [r for r in data if r.difficulty == "easy"]
    assert hard and easy
    for rec in easy:
        assert int(np.argmax(dirs @ rec.global_feats.mean(axis=0))) == rec.labels[0]
    for rec in hard:
        assert np.abs(rec.global_feats @ dirs.T).max() < 0.6
