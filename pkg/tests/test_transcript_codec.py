"""
测试传输记录序列化
"""
import numpy as np
import pytest

from src.models.transcript import DeliveryTranscript, Layer, Segment, SegmentKind
from src.utils.bits import empty_bits
from src.utils.exceptions import InvalidParams
from src.utils.transcript_codec import MAGIC, deserialize, read_transcript, serialize, write_transcript


def sample_transcript() -> DeliveryTranscript:
    """辅助函数，构造包含编码、占位、未编码与 RLC 分段的传输记录"""
    return DeliveryTranscript(file_bits=100, records=[
        Segment(SegmentKind.CODED, np.array([1, 0, 1, 1, 0, 0, 1, 0, 1], dtype=np.uint8), subset=0b011),
        Segment(SegmentKind.EMPTY, empty_bits(), subset=0b101),
        Segment(SegmentKind.UNCODED, np.ones(13, dtype=np.uint8), file_index=2, layer=Layer.SUFFIX),
        Segment(SegmentKind.RLC, np.array([0, 1, 1], dtype=np.uint8), file_index=1, generation=4,
                coefficient_seed_id=2 ** 63 + 5),
    ])


def test_serialize_preserves_records():
    original = sample_transcript()
    restored = deserialize(serialize(original))
    assert restored.file_bits == 100
    assert [seg.label for seg in restored.records] == [seg.label for seg in original.records]
    for a, b in zip(original.records, restored.records):
        assert np.array_equal(a.payload, b.payload)
        assert a.coefficient_seed_id == b.coefficient_seed_id
    assert restored.total_bits == original.total_bits == 25


def test_serialize_starts_with_magic():
    assert serialize(sample_transcript()).startswith(MAGIC)


def test_bad_magic():
    data = bytearray(serialize(sample_transcript()))
    data[0:4] = b"XXXX"
    with pytest.raises(InvalidParams):
        deserialize(bytes(data))


def test_truncated_data():
    data = serialize(sample_transcript())
    with pytest.raises(InvalidParams):
        deserialize(data[:-1])
    with pytest.raises(InvalidParams):
        deserialize(data[:5])


def test_trailing_bytes():
    with pytest.raises(InvalidParams):
        deserialize(serialize(sample_transcript()) + b"\x00")


def test_write_and_read_file(tmp_path):
    path = str(tmp_path / "run.cctr")
    write_transcript(path, sample_transcript())
    restored = read_transcript(path)
    assert len(restored) == 3
    assert restored.find(SegmentKind.RLC, file_index=1, generation=4).bits == 3
