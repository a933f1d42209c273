import struct

import numpy as np
import pytest

from gatedvigat.errors import ModelFileError
from gatedvigat.pipeline.modelfile import ModelBundle, decode_model, encode_model, load_model, save_model


@pytest.fixture
def bundle(tiny_head, tiny_gates, tiny_schedule):
    return ModelBundle(head=tiny_head, gates=tiny_gates, schedule=tiny_schedule, config_hash="f" * 40, seed=3)


def test_save_load_preserves_parameters(bundle, tmp_path):
    path = save_model(bundle, str(tmp_path / "m" / "model.gvgm"))
    back = load_model(str(path))
    assert back.head.checksum() == bundle.head.checksum()
    assert back.head.label_mode == bundle.head.label_mode
    assert back.schedule == bundle.schedule
    assert back.config_hash == bundle.config_hash and back.seed == 3
    assert [g.gate_index for g in back.gates] == [1, 2]
    for a, b in zip(bundle.gates, back.gates):
        fa, fb = a.flat(), b.flat()
        assert fa.keys() == fb.keys()
        assert all(np.array_equal(fa[k], fb[k]) for k in fa)


def test_encoding_is_deterministic(bundle):
    assert encode_model(bundle) == encode_model(bundle)


def test_head_only_bundle(tiny_head, tiny_schedule):
    b = ModelBundle(head=tiny_head, gates=[], schedule=tiny_schedule, config_hash="x")
    back = decode_model(encode_model(b))
    assert not back.has_gates
    assert back.head.checksum() == tiny_head.checksum()


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda d: b"NOPE" + d[4:],
        lambda d: d[:4] + struct.pack("<H", 7) + d[6:],
        lambda d: d[:-8],
        lambda d: d + b"\x00" * 8,
        lambda d: d[:3],
        lambda d: d[:10] + b"X" + d[11:],
    ],
)
def test_corrupt_files_raise(bundle, corrupt):
    with pytest.raises(ModelFileError):
        decode_model(corrupt(encode_model(bundle)))


def test_hash_mismatch_warns(bundle, tmp_path, loguru_messages):
    path = save_model(bundle, str(tmp_path / "model.gvgm"))
    load_model(str(path), expected_hash="0" * 40)
    assert any("mismatch" in m for m in loguru_messages)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(str(tmp_path / "absent.gvgm"))
