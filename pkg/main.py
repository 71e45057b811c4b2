"""
编码缓存差距实验室入口模块

作为命令行程序的入口点，负责初始化日志系统并分派子命令。
提供异常捕获和错误处理机制，未预期的异常记录后以退出码 1 结束。
"""

import sys
import traceback

from src.cli.app import run
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def main():
    """
    程序主入口函数

    运行命令行应用，包括：
    - 设置全局异常处理
    - 分派子命令
    - 以子命令的退出码结束
    """
    try:
        logger.debug(f"Python版本: {sys.version}")
        code = run(sys.argv[1:])

    except Exception as e:
        # 记录未捕获的异常
        error_msg = f"程序发生未处理的异常: {str(e)}"
        logger.critical(error_msg, exc_info=True)

        # 获取详细的堆栈跟踪
        stack_trace = traceback.format_exc()
        logger.critical(f"堆栈跟踪:\n{stack_trace}")
        sys.exit(1)

    sys.exit(code)


if __name__ == "__main__":
    main()
