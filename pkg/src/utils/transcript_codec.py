"""
传输记录序列化模块

二进制布局（小端）：
    文件头: magic b"CCTR" | version u8 | 分段数 u32 | 文件长度 F u32
    分段头: kind u8 | layer u8 | subset_mask u64 | file_index u32 | payload_bits u32
    RLC 分段追加: generation u32 | count u32 | coefficient_seed_id u64
    载荷: LSB 优先打包到字节边界

EMPTY 占位标记按原顺序写出，载荷长度为 0。
"""

import struct
from typing import BinaryIO, Union

from src.models.transcript import DeliveryTranscript, Layer, Segment, SegmentKind
from src.utils.bits import pack_bits, packed_size, unpack_bits
from src.utils.exceptions import InvalidParams
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"CCTR"
VERSION = 1

_FILE_HEADER = struct.Struct("<4sBII")
_SEGMENT_HEADER = struct.Struct("<BBQII")
_RLC_EXTRA = struct.Struct("<IIQ")


def serialize(transcript: DeliveryTranscript) -> bytes:
    """
    将传输记录编码为字节串

    Args:
        transcript: 传输记录（含 EMPTY 占位标记）

    Returns:
        bytes: 序列化结果
    """
    chunks = [_FILE_HEADER.pack(MAGIC, VERSION, len(transcript.records), transcript.file_bits)]
    for seg in transcript.records:
        chunks.append(_SEGMENT_HEADER.pack(int(seg.kind), int(seg.layer), seg.subset,
                                           seg.file_index, seg.bits))
        if seg.kind == SegmentKind.RLC:
            chunks.append(_RLC_EXTRA.pack(seg.generation, seg.bits, seg.coefficient_seed_id))
        chunks.append(pack_bits(seg.payload))
    data = b"".join(chunks)
    logger.debug(f"序列化传输记录: {len(transcript.records)} 个分段, {len(data)} 字节")
    return data


def deserialize(data: bytes) -> DeliveryTranscript:
    """
    serialize 的逆操作

    Raises:
        InvalidParams: 魔数、版本或长度不符
    """
    if len(data) < _FILE_HEADER.size:
        raise InvalidParams("传输记录数据过短")
    magic, version, count, file_bits = _FILE_HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise InvalidParams(f"无效的魔数: {magic!r}")
    if version != VERSION:
        raise InvalidParams(f"不支持的版本: {version}")

    offset = _FILE_HEADER.size
    records = []
    try:
        for _ in range(count):
            kind, layer, subset, file_index, n_bits = _SEGMENT_HEADER.unpack_from(data, offset)
            offset += _SEGMENT_HEADER.size
            generation, seed_id = 0, 0
            if kind == SegmentKind.RLC:
                generation, rlc_count, seed_id = _RLC_EXTRA.unpack_from(data, offset)
                offset += _RLC_EXTRA.size
                if rlc_count != n_bits:
                    raise InvalidParams(f"RLC 组合数 {rlc_count} 与载荷长度 {n_bits} 不一致")
            size = packed_size(n_bits)
            if offset + size > len(data):
                raise InvalidParams("载荷被截断")
            payload = unpack_bits(data[offset:offset + size], n_bits)
            offset += size
            records.append(Segment(SegmentKind(kind), payload, subset=subset, file_index=file_index,
                                   layer=Layer(layer), generation=generation,
                                   coefficient_seed_id=seed_id))
    except struct.error as e:
        raise InvalidParams(f"传输记录格式错误: {e}") from e
    if offset != len(data):
        raise InvalidParams(f"传输记录末尾有 {len(data) - offset} 字节多余数据")
    return DeliveryTranscript(file_bits=file_bits, records=records)


def write_transcript(target: Union[str, BinaryIO], transcript: DeliveryTranscript) -> None:
    """写入文件路径或二进制流"""
    data = serialize(transcript)
    if isinstance(target, str):
        logger.info(f"写入传输记录: {target}")
        with open(target, "wb") as file:
            file.write(data)
    else:
        target.write(data)


def read_transcript(path: str) -> DeliveryTranscript:
    logger.info(f"读取传输记录: {path}")
    with open(path, "rb") as file:
        return deserialize(file.read())
