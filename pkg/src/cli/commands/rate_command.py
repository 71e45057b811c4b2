"""
rate 子命令

输出解析速率表：R_U、R_C、R_D、比值与 R_C 所处的分段。
"""

from typing import Dict, List, TextIO

from src.cli.run_config import RunConfig
from src.models.system_params import DEFAULT_TOLERANCES, SystemParams, Tolerances
from src.services.gap_service import GapService
from src.services.rate_service import RateService
from src.utils.csv_handler import CSVHandler
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

RATE_COLUMNS = ("K", "N", "M", "R_U", "R_C", "R_D", "ratio", "piecewise_case")


def rate_row(params: SystemParams, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Dict[str, object]:
    """单个参数点的速率行；M = N 时抛出 DegenerateRatio"""
    ratio = RateService.gap_ratio(params, tolerances)
    _, case = RateService.centralized_rate_piecewise(params)
    return {
        "K": params.users,
        "N": params.files,
        "M": params.memory,
        "R_U": RateService.uncoded_rate(params),
        "R_C": RateService.centralized_rate(params),
        "R_D": RateService.decentralized_rate(params),
        "ratio": ratio,
        "piecewise_case": case.value,
    }


def build_rows(config: RunConfig) -> List[Dict[str, object]]:
    """
    单点直接求值；网格经由 sweep_gap 向量化求值，跳过 M ≥ N 的组合
    """
    if config.is_single_point:
        return [rate_row(SystemParams(config.users[0], config.files[0], config.memory[0]), config.tolerances)]

    sweep = GapService.sweep_gap(
        users=config.users,
        files=config.files,
        memory_values=config.memory or None,
        collect_reports=True,
        threads=config.threads,
        tolerances=config.tolerances,
    )
    skipped = sum(1 for n in config.files for m in config.memory if m >= n) * len(config.users)
    if skipped:
        logger.warning(f"跳过 {skipped} 个 M ≥ N 的组合（比值无定义）")
    rows = []
    for report in sweep.reports:
        row = report.as_row()
        row["R_U"] = report.users * (1 - report.memory / report.files) * min(1.0, report.files / report.users)
        rows.append({column: row[column] for column in RATE_COLUMNS})
    return rows


def run_rate(config: RunConfig, stream: TextIO) -> int:
    rows = build_rows(config)
    CSVHandler.write_rows(rows, RATE_COLUMNS, config.fmt, file_path=config.out, stream=stream)
    return 0
