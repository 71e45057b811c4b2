"""
日志配置模块

提供统一的日志配置和格式化，支持文件和控制台输出。
控制台输出写到 stderr，保证 CSV/JSON 结果在 stdout 上保持干净。
"""

import logging
import os
from datetime import datetime

_LOG_FORMAT = '%(asctime)s [%(name)s] %(levelname)s: %(message)s'
_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(name: str) -> logging.Logger:
    """
    配置并返回一个日志记录器

    环境变量：
        CCLAB_LOG_DIR: 日志目录，默认 "logs"；设为空字符串时不写日志文件
        CCLAB_LOG_LEVEL: 控制台日志级别，默认 INFO

    Args:
        name: 日志记录器名称，通常使用模块名

    Returns:
        logging.Logger: 配置好的日志记录器
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    # 如果已经有处理器，不重复添加
    if logger.handlers:
        return logger

    formatter = logging.Formatter(_LOG_FORMAT, datefmt=_DATE_FORMAT)

    log_dir = os.environ.get("CCLAB_LOG_DIR", "logs")
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f"{datetime.now().strftime('%Y%m%d')}.log")
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # 控制台处理器（stderr）
    console_level = os.environ.get("CCLAB_LOG_LEVEL", "INFO").upper()
    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, console_level, logging.INFO))
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # 避免与根记录器重复输出
    logger.propagate = False

    return logger
