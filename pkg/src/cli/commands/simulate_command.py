"""
simulate 子命令

逐比特仿真并输出实测速率与解析速率的对比；任一运行解码失败时返回 1。
"""

import os
from typing import TextIO

from src.cli.run_config import RunConfig
from src.services.simulation_service import SIMULATION_COLUMNS, SUMMARY_COLUMNS, SimulationService
from src.utils.csv_handler import CSVHandler
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def run_simulate(config: RunConfig, stream: TextIO) -> int:
    points = SimulationService.parameter_points(config.users, config.files, config.memory, config.file_bits)
    if config.transcript_dir:
        os.makedirs(config.transcript_dir, exist_ok=True)

    rows = SimulationService.simulate(
        config.scheme, points, config.seeds, config.demands,
        memory_sharing=config.memory_sharing,
        threads=config.threads,
        transcript_dir=config.transcript_dir,
    )

    if config.summary:
        table = SimulationService.summarize(rows, config.tolerances.mc_relative)
        CSVHandler.write_rows(table, SUMMARY_COLUMNS, config.fmt, file_path=config.out, stream=stream)
        outside = [r for r in table if not r["within_tolerance"]]
        if outside:
            logger.warning(f"{len(outside)} 个参数点的平均速率超出容差 {config.tolerances.mc_relative}")
    else:
        CSVHandler.write_rows([r.as_row() for r in rows], SIMULATION_COLUMNS, config.fmt,
                              file_path=config.out, stream=stream)

    if not all(r.decode_ok for r in rows):
        logger.error("存在解码失败的运行")
        return 1
    return 0
