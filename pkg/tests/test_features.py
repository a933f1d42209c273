import struct

import numpy as np
import pytest

from gatedvigat.errors import FeatureFileError, InvalidInputError
from gatedvigat.pipeline.features import (
    METADATA_FILE,
    SUFFIX,
    dataset_shape,
    decode_record,
    encode_record,
    load_dataset,
    save_dataset,
    scan_dataset,
)
from gatedvigat.pipeline.records import VideoRecord, validate_record


def _record(video_id="x1", p=3, k=2, f=4, labels=(1,), seed=0) -> VideoRecord:
    rng = np.random.default_rng(seed)
    return VideoRecord(
        video_id=video_id,
        labels=labels,
        global_feats=rng.normal(size=(p, f)).astype(np.float32).astype(np.float64),
        object_feats=rng.normal(size=(p, k, f)).astype(np.float32).astype(np.float64),
        object_docs=np.tile(np.linspace(0.9, 0.1, k), (p, 1)).astype(np.float32).astype(np.float64),
    )


def test_round_trip_is_bit_exact(tmp_path, tiny_dataset):
    save_dataset(tiny_dataset, str(tmp_path))
    loaded = load_dataset(str(tmp_path), num_classes=2)
    assert [r.video_id for r in loaded] == [r.video_id for r in tiny_dataset]
    for a, b in zip(tiny_dataset, loaded):
        assert a.labels == b.labels
        assert np.array_equal(a.global_feats, b.global_feats)
        assert np.array_equal(a.object_feats, b.object_feats)
        assert np.array_equal(a.object_docs, b.object_docs)
        assert a.object_names == b.object_names
        assert np.array_equal(a.object_boxes, b.object_boxes)
        assert a.tags == b.tags


def test_records_without_metadata_skip_sidecar(tmp_path):
    save_dataset([_record()], str(tmp_path))
    assert not (tmp_path / METADATA_FILE).exists()
    (rec,) = load_dataset(str(tmp_path))
    assert not rec.has_metadata
    assert rec.difficulty is None


def test_empty_directory_warns(tmp_path, loguru_messages):
    assert load_dataset(str(tmp_path)) == []
    assert any("empty dataset" in m for m in loguru_messages)


def test_missing_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(str(tmp_path / "nope"))


def _write(tmp_path, name, data: bytes):
    (tmp_path / f"{name}{SUFFIX}").write_bytes(data)


def test_varying_object_count_is_rejected(tmp_path, loguru_messages):
    rec = _record("good")
    save_dataset([rec], str(tmp_path))
    # 헤더는 K=2인데 두 번째 프레임에 객체가 하나 더 있음
    p, f, k = 2, 3, 2
    parts = [struct.pack("<4sHIIII", b"GVGF", 1, p, f, k, 1), struct.pack("<I", 0)]
    parts.append(np.ones((p, f), dtype="<f4").tobytes())
    parts.append(np.array([0.9, 0.5], dtype="<f4").tobytes() + np.ones((k, f), dtype="<f4").tobytes())
    parts.append(np.array([0.9, 0.5, 0.2], dtype="<f4").tobytes() + np.ones((k + 1, f), dtype="<f4").tobytes())
    _write(tmp_path, "bad", b"".join(parts))

    result = scan_dataset(str(tmp_path))
    assert [r.video_id for r in result.records] == ["good"]
    assert len(result.rejections) == 1
    err = result.rejections[0]
    assert err.field == "object_feats"
    assert err.path.endswith(f"bad{SUFFIX}")
    assert any("bad" in m and "object_feats" in m for m in loguru_messages)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda r: VideoRecord(r.video_id, r.labels, r.global_feats, r.object_feats, r.object_docs[:, ::-1].copy()), "object_docs"),
        (lambda r: VideoRecord(r.video_id, r.labels, np.vstack([np.zeros((1, 4)), r.global_feats[1:]]), r.object_feats, r.object_docs), "global_feats"),
        (lambda r: VideoRecord(r.video_id, (7,), r.global_feats, r.object_feats, r.object_docs), "labels"),
    ],
)
def test_invariant_violations_are_rejected_with_field(tmp_path, mutate, field):
    _write(tmp_path, "v", encode_record(mutate(_record("v"))))
    result = scan_dataset(str(tmp_path), num_classes=3)
    assert result.records == []
    assert result.rejections[0].field == field
    assert result.rejections[0].to_dict()["file"].endswith(f"v{SUFFIX}")


def test_bad_magic_and_truncated_header(tmp_path):
    data = encode_record(_record("m"))
    _write(tmp_path, "m", b"XXXX" + data[4:])
    _write(tmp_path, "t", data[:5])
    fields = sorted(e.field for e in scan_dataset(str(tmp_path)).rejections)
    assert fields == ["header", "magic"]


def test_unsupported_version():
    data = bytearray(encode_record(_record()))
    data[4:6] = struct.pack("<H", 9)
    with pytest.raises(FeatureFileError) as exc:
        decode_record(bytes(data), "mem", "x1")
    assert exc.value.field == "version"


def test_single_label_mode_rejects_multilabel_file(tmp_path):
    _write(tmp_path, "ml", encode_record(_record("ml", labels=(0, 2))))
    assert load_dataset(str(tmp_path), label_mode="multi", num_classes=3)[0].labels == (0, 2)
    result = scan_dataset(str(tmp_path), label_mode="single")
    assert result.rejections[0].field == "labels"


def test_unsafe_video_id_rejected(tmp_path):
    with pytest.raises(InvalidInputError):
        save_dataset([_record("../escape")], str(tmp_path))


def test_validate_record_checks_metadata_shapes():
    rec = _record()
    bad = VideoRecord(rec.video_id, rec.labels, rec.global_feats, rec.object_feats, rec.object_docs,
                      object_names=[["a", "b"]], object_boxes=None)
    with pytest.raises(FeatureFileError) as exc:
        validate_record(bad)
    assert exc.value.field == "object_names"


def test_dataset_shape(tiny_dataset):
    assert dataset_shape(tiny_dataset) == (8, 3)
    with pytest.raises(InvalidInputError):
        dataset_shape([])
    with pytest.raises(InvalidInputError):
        dataset_shape([_record(f=4), _record(f=5)])
