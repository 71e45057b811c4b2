"""
命令行应用模块

构建 argparse 解析器，分派 rate / simulate / verify 子命令，并把异常映射为退出码：
0 成功，1 验证失败，2 用法错误。
"""

import argparse
import sys
from typing import List, Optional, TextIO

from src import __version__
from src.cli.commands.rate_command import run_rate
from src.cli.commands.simulate_command import run_simulate
from src.cli.commands.verify_command import run_verify
from src.cli.run_config import RunConfig
from src.services.parameter_service import ParameterService
from src.utils.exceptions import (BoundViolation, DecodeFailure, DegenerateRatio, IndivisibleFile,
                                  InvalidParams, NonCornerMemory, OutOfRange, UsageError)
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

USAGE_ERRORS = (UsageError, InvalidParams, OutOfRange, DegenerateRatio, NonCornerMemory, IndivisibleFile)
VERIFICATION_ERRORS = (BoundViolation, DecodeFailure)

COMMANDS = {
    "rate": run_rate,
    "simulate": run_simulate,
    "verify": run_verify,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-K", "--users", help="用户数 K：数值或 a:b:step")
    parser.add_argument("-N", "--files", help="文件数 N：数值或 a:b:step")
    parser.add_argument("-M", "--memory", help="缓存大小 M（以文件为单位）：数值或 a:b:step")
    parser.add_argument("--seed", type=int, default=None, help="主种子（默认 0）")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="输出格式")
    parser.add_argument("--out", default=None, help="输出文件路径，默认写到标准输出")
    parser.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                        help="覆盖容差：ratio_slack / formula_equality / mc_relative，可重复")


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="cclab",
        description="编码缓存差距实验室：解析速率、逐比特仿真与速率比数值验证",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="输出解析速率表")
    _add_common(rate)

    simulate = sub.add_parser("simulate", help="逐比特仿真集中式或去中心化方案")
    _add_common(simulate)
    simulate.add_argument("--scheme", choices=ParameterService.SCHEMES, default="decentralized")
    simulate.add_argument("-F", "--file-bits", type=int, default=None, help="文件长度 F（比特）")
    simulate.add_argument("--seeds", type=int, default=None,
                          help=f"种子个数（去中心化默认 {ParameterService.get_default('seeds')}）")
    simulate.add_argument("--demands", default="distinct", help="exhaustive | distinct | custom=1,2,3")
    simulate.add_argument("--memory-sharing", action="store_true", help="集中式非角点时使用存储共享")
    simulate.add_argument("--summary", action="store_true", help="按参数点汇总多个种子")
    simulate.add_argument("--transcript-dir", default=None, help="把每次运行的传输记录写入该目录")

    verify = sub.add_parser("verify", help="运行全部数值检查")
    _add_common(verify)
    verify.add_argument("--appendix", action="store_true", help="只输出附录数值与参考值")
    verify.add_argument("--limit", default=None, metavar="'N=4 M=2 Kmax=100000 eps=0.001'",
                        help="只做一次 K → ∞ 的极限检查")
    return parser


def run(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """
    解析参数并执行子命令

    Args:
        argv: 命令行参数，默认取 sys.argv[1:]
        stdout: 结果输出流，默认 sys.stdout

    Returns:
        int: 退出码
    """
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        config = RunConfig.from_args(args)
        logger.debug(f"运行配置: {config}")
        return COMMANDS[config.command](config, stdout)

    except USAGE_ERRORS as e:
        logger.error(f"用法错误: {e}")
        return EXIT_USAGE

    except VERIFICATION_ERRORS as e:
        logger.error(f"验证失败: {e}")
        return EXIT_FAILURE
