"""
CSV文件处理模块

提供结果表格的输出功能，包括CSV/JSON格式的渲染
以及写入结果文件或标准输出。
"""

import csv
import io
import json
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

from src.utils.logger import setup_logger

logger = setup_logger(__name__)

Row = Dict[str, object]


class CSVHandler:
    """
    CSV文件处理类

    提供结果表格操作相关功能，包括：
    - 将结果行格式化为CSV或JSON文本
    - 写入结果文件或标准输出
    """

    FORMATS = ("csv", "json")

    @staticmethod
    def format_value(value: object) -> str:
        """
        单元格格式化：浮点数使用 repr 保证逐字节可复现，布尔值写为 true/false
        """
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    @classmethod
    def rows_to_csv(cls, rows: Iterable[Row], columns: Sequence[str]) -> str:
        """
        将结果行转换为CSV文本（表头 + LF 行尾）

        Args:
            rows: 结果行
            columns: 列顺序

        Returns:
            str: CSV文本
        """
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: cls.format_value(row[k]) for k in columns})
        return buffer.getvalue()

    @staticmethod
    def rows_to_json(rows: Iterable[Row], columns: Sequence[str]) -> str:
        """JSON 输出与 CSV 行一一对应，字段名相同"""
        payload = [{k: row[k] for k in columns} for row in rows]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def render(cls, rows: List[Row], columns: Sequence[str], fmt: str = "csv") -> str:
        if fmt not in cls.FORMATS:
            raise ValueError(f"不支持的输出格式: {fmt}")
        if fmt == "json":
            return cls.rows_to_json(rows, columns)
        return cls.rows_to_csv(rows, columns)

    @classmethod
    def write_rows(cls, rows: List[Row], columns: Sequence[str], fmt: str = "csv",
                   file_path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
        """
        写入结果数据

        file_path 为空时写到 stream（通常是标准输出）。

        Raises:
            PermissionError: 文件访问权限错误
            OSError: 文件系统错误
        """
        text = cls.render(rows, columns, fmt)
        if file_path is None:
            if stream is not None:
                stream.write(text)
            return

        logger.info(f"开始写入结果文件: {file_path}")
        try:
            with open(file_path, 'w', newline='', encoding='utf-8') as file:
                file.write(text)
            logger.info(f"成功写入 {len(rows)} 条记录")

        except PermissionError:
            error_msg = f"无法写入文件，请检查文件权限: {file_path}"
            logger.error(error_msg)
            raise

        except OSError as e:
            error_msg = f"写入文件时出错: {str(e)}"
            logger.error(error_msg)
            raise
