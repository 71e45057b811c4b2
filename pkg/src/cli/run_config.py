"""
运行配置模块

把命令行参数整理为不可变的 RunConfig，所有解析与验证都交给 ParameterService。
"""

import argparse
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from src.models.library import DemandPolicy
from src.models.system_params import DEFAULT_TOLERANCES, Tolerances
from src.services.parameter_service import ParameterService
from src.utils.exceptions import UsageError


@dataclass(frozen=True)
class RunConfig:
    """
    一次命令行运行的完整配置

    Attributes:
        command: rate / simulate / verify
        users, files, memory: K / N / M 的取值（memory 为空表示使用默认 M 网格）
        file_bits: F（simulate）
        scheme: centralized / decentralized（simulate）
        seed: 主种子；seed_count: 种子个数
        demands: 请求策略
        fmt: csv / json
        out: 输出文件路径，None 表示标准输出
        tolerances: 生效的容差
        memory_sharing: 集中式非角点时启用存储共享
        summary: simulate 输出按参数点汇总的结果
        transcript_dir: simulate 写出传输记录的目录
        appendix: verify 只输出附录数值表
        limit: verify 只做一次极限检查
        threads: 并发数
    """

    command: str
    users: Tuple[int, ...] = ()
    files: Tuple[int, ...] = ()
    memory: Tuple[float, ...] = ()
    file_bits: Optional[int] = None
    scheme: str = "decentralized"
    seed: int = 0
    seed_count: int = 1
    demands: DemandPolicy = DemandPolicy("distinct")
    fmt: str = "csv"
    out: Optional[str] = None
    tolerances: Tolerances = DEFAULT_TOLERANCES
    memory_sharing: bool = False
    summary: bool = False
    transcript_dir: Optional[str] = None
    appendix: bool = False
    limit: Optional[Dict[str, float]] = None
    threads: int = 1

    @property
    def seeds(self) -> Tuple[int, ...]:
        return tuple(range(self.seed, self.seed + self.seed_count))

    @property
    def is_single_point(self) -> bool:
        return len(self.users) == 1 and len(self.files) == 1 and len(self.memory) == 1

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """
        由 argparse 结果构造配置

        Raises:
            UsageError: 参数无效
        """
        command = args.command
        users = tuple(ParameterService.parse_range(args.users, integer=True)) if args.users else ()
        files = tuple(ParameterService.parse_range(args.files, integer=True)) if args.files else ()
        memory = tuple(ParameterService.parse_range(args.memory)) if args.memory else ()

        if command in ("rate", "simulate") and (not users or not files):
            raise UsageError(f"{command} 需要 --users 与 --files")
        if command == "simulate" and not memory:
            raise UsageError("simulate 需要 --memory")
        if any(k < 2 for k in users):
            raise UsageError(f"用户数 K 必须 ≥ 2: {users}")
        if any(n < 1 for n in files):
            raise UsageError(f"文件数 N 必须 ≥ 1: {files}")
        if any(m <= 0 for m in memory):
            raise UsageError(f"缓存大小 M 必须为正: {memory}")

        scheme = getattr(args, "scheme", "decentralized")
        file_bits = getattr(args, "file_bits", None)
        if command == "simulate" and file_bits is None:
            file_bits = ParameterService.default_file_bits(scheme)
        if file_bits is not None and file_bits < 1:
            raise UsageError(f"文件长度 F 必须为正整数: {file_bits}")

        seed = args.seed if args.seed is not None else ParameterService.get_default('seed')
        if seed < 0:
            raise UsageError(f"种子必须为非负整数: {seed}")
        seed_count = getattr(args, "seeds", None)
        if seed_count is None:
            seed_count = ParameterService.get_default('seeds') if scheme == "decentralized" else 1
        if seed_count < 1:
            raise UsageError(f"种子个数必须 ≥ 1: {seed_count}")

        demands = ParameterService.parse_demand_policy(getattr(args, "demands", None) or "distinct")
        limit = ParameterService.parse_limit(args.limit) if getattr(args, "limit", None) else None

        return cls(
            command=command,
            users=users,
            files=files,
            memory=memory,
            file_bits=file_bits,
            scheme=scheme,
            seed=seed,
            seed_count=seed_count,
            demands=demands,
            fmt=args.format,
            out=args.out,
            tolerances=Tolerances.from_mapping(ParameterService.parse_tolerances(args.tolerance or [])),
            memory_sharing=getattr(args, "memory_sharing", False),
            summary=getattr(args, "summary", False),
            transcript_dir=getattr(args, "transcript_dir", None),
            appendix=getattr(args, "appendix", False),
            limit=limit,
            threads=ParameterService.thread_count(),
        )
