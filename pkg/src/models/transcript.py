"""
传输记录模块

DeliveryTranscript 是共享链路上发送的有序分段列表，
分段载荷总长度除以 F 即为实测速率。
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.utils.bits import BIT_DTYPE
from src.utils.combinatorics import format_mask
from src.utils.exceptions import InvalidParams


class SegmentKind(IntEnum):
    """分段类型"""
    CODED = 0     # 子集 S 上的异或
    UNCODED = 1   # 未编码发送的文件后缀
    RLC = 2       # 一代随机线性组合
    EMPTY = 3     # 长度为 0 的编码分段的占位标记


class Layer(IntEnum):
    """存储共享时的分层：整体 / 前缀子库 / 后缀子库"""
    WHOLE = 0
    PREFIX = 1
    SUFFIX = 2


SegmentLabel = Tuple[int, int, int, int, int]


@dataclass(frozen=True, eq=False)
class Segment:
    """
    单个传输分段

    Attributes:
        kind: 分段类型
        payload: 载荷比特
        subset: 编码分段对应的用户子集掩码
        file_index: 未编码 / RLC 分段对应的文件编号
        layer: 存储共享分层
        generation: RLC 分段所属的代
        coefficient_seed_id: RLC 系数子流标识
    """

    kind: SegmentKind
    payload: np.ndarray
    subset: int = 0
    file_index: int = 0
    layer: Layer = Layer.WHOLE
    generation: int = 0
    coefficient_seed_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "payload", np.asarray(self.payload, dtype=BIT_DTYPE))

    @property
    def bits(self) -> int:
        return int(self.payload.size)

    @property
    def label(self) -> SegmentLabel:
        return (int(self.layer), int(self.kind), self.subset, self.file_index, self.generation)

    def describe(self) -> str:
        if self.kind in (SegmentKind.CODED, SegmentKind.EMPTY):
            return f"{self.kind.name}{format_mask(self.subset)}"
        if self.kind == SegmentKind.RLC:
            return f"RLC(W{self.file_index}, gen {self.generation})"
        return f"UNCODED(W{self.file_index})"


@dataclass(eq=False)
class DeliveryTranscript:
    """
    传输记录

    Attributes:
        file_bits: 原始文件长度 F
        records: 有序分段（含 EMPTY 占位标记）
        scheme: 产生该记录的投递过程名称
        layer_scale: 各分层计入速率时的比例（补零比特不计入速率）
        side_info: 双方共享、不计入速率的元数据（例如 V 分段的比特位置）
    """

    file_bits: int
    records: List[Segment] = field(default_factory=list)
    scheme: str = ""
    layer_scale: Dict[Layer, float] = field(default_factory=dict)
    side_info: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        labels = [seg.label for seg in self.records]
        if len(labels) != len(set(labels)):
            raise InvalidParams(f"传输记录中存在重复标签: {self.scheme}")
        self._index = {seg.label: seg for seg in self.records}

    def append(self, segment: Segment) -> None:
        if segment.label in self._index:
            raise InvalidParams(f"重复的分段标签: {segment.describe()}")
        self.records.append(segment)
        self._index[segment.label] = segment

    def extend(self, segments: Iterable[Segment]) -> None:
        for seg in segments:
            self.append(seg)

    @property
    def segments(self) -> List[Segment]:
        """实际发送的分段（不含占位标记）"""
        return [seg for seg in self.records if seg.kind != SegmentKind.EMPTY]

    def find(self, kind: SegmentKind, subset: int = 0, file_index: int = 0,
             layer: Layer = Layer.WHOLE, generation: int = 0) -> Optional[Segment]:
        return self._index.get((int(layer), int(kind), subset, file_index, generation))

    @property
    def total_bits(self) -> int:
        return sum(seg.bits for seg in self.segments)

    @property
    def accounted_bits(self) -> float:
        """计入速率的比特数（按分层比例扣除补零）"""
        return sum(seg.bits * self.layer_scale.get(seg.layer, 1.0) for seg in self.segments)

    @property
    def measured_rate(self) -> float:
        return self.accounted_bits / self.file_bits

    def __len__(self) -> int:
        return len(self.segments)
