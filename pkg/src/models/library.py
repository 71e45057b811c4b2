"""
文件库与用户请求模块
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, List, Tuple

import numpy as np

from src.utils.bits import BIT_DTYPE, random_bits
from src.utils.exceptions import InvalidParams
from src.utils.rng import library_rng


@dataclass(frozen=True, eq=False)
class FileLibrary:
    """
    文件库：N 个等长的比特串，文件编号 1..N

    Attributes:
        files: 各文件的比特串（uint8 0/1 数组）
    """

    files: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.files:
            raise InvalidParams("文件库不能为空")
        lengths = {f.size for f in self.files}
        if len(lengths) != 1:
            raise InvalidParams(f"文件长度不一致: {sorted(lengths)}")
        frozen = tuple(np.asarray(f, dtype=BIT_DTYPE) for f in self.files)
        for f in frozen:
            f.setflags(write=False)
        object.__setattr__(self, "files", frozen)

    @classmethod
    def random(cls, num_files: int, file_bits: int, seed: int = 0) -> "FileLibrary":
        """生成随机文件库，每个文件使用独立子流"""
        return cls(tuple(random_bits(library_rng(seed, n), file_bits) for n in range(1, num_files + 1)))

    @property
    def num_files(self) -> int:
        return len(self.files)

    @property
    def file_bits(self) -> int:
        return int(self.files[0].size)

    def file(self, index: int) -> np.ndarray:
        """按编号（1..N）取文件"""
        return self.files[index - 1]

    def slice(self, start: int, stop: int) -> "FileLibrary":
        """取每个文件的 [start, stop) 比特构成子文件库"""
        return FileLibrary(tuple(f[start:stop] for f in self.files))


@dataclass(frozen=True)
class DemandVector:
    """
    用户请求向量：d_k ∈ {1..N}

    Attributes:
        demands: 各用户请求的文件编号
        files: 文件数 N，用于范围检查
    """

    demands: Tuple[int, ...]
    files: int
    policy: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(int(d) for d in self.demands))
        bad = [d for d in self.demands if not 1 <= d <= self.files]
        if bad:
            raise InvalidParams(f"请求的文件编号超出范围 1..{self.files}: {bad}")

    @classmethod
    def distinct(cls, users: int, files: int) -> "DemandVector":
        """默认的最坏情况请求：d_k = ((k-1) mod N) + 1"""
        return cls(tuple(((k - 1) % files) + 1 for k in range(1, users + 1)), files, "distinct")

    @classmethod
    def exhaustive(cls, users: int, files: int) -> Iterator["DemandVector"]:
        """枚举全部 N^K 个请求向量"""
        for combo in product(range(1, files + 1), repeat=users):
            yield cls(combo, files, "exhaustive")

    @property
    def users(self) -> int:
        return len(self.demands)

    def demand_of(self, user: int) -> int:
        return self.demands[user - 1]

    def distinct_files(self) -> List[int]:
        return sorted(set(self.demands))

    def requesters(self, file_index: int) -> List[int]:
        """请求 file_index 的用户（1..K）"""
        return [k for k, d in enumerate(self.demands, start=1) if d == file_index]

    def check_users(self, users: int) -> None:
        if self.users != users:
            raise InvalidParams(f"请求向量长度 {self.users} 与用户数 {users} 不一致")

    def __str__(self) -> str:
        return "(" + ",".join(str(d) for d in self.demands) + ")"


@dataclass(frozen=True)
class DemandPolicy:
    """
    请求策略

    Attributes:
        name: exhaustive / distinct / custom
        demands: custom 策略给出的请求向量
    """

    name: str
    demands: Tuple[int, ...] = ()

    def vectors(self, users: int, files: int) -> List[DemandVector]:
        """生成该策略下的全部请求向量"""
        if self.name == "exhaustive":
            return list(DemandVector.exhaustive(users, files))
        if self.name == "distinct":
            return [DemandVector.distinct(users, files)]
        if len(self.demands) != users:
            raise InvalidParams(f"自定义请求长度 {len(self.demands)} 与用户数 K={users} 不一致")
        return [DemandVector(self.demands, files, "custom")]

    def __str__(self) -> str:
        if self.name == "custom":
            return "custom=" + ",".join(str(d) for d in self.demands)
        return self.name
