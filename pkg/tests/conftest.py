"""
测试公共配置

日志目录重定向到临时目录，避免测试在仓库中写入日志文件。
"""
import os
import tempfile

os.environ.setdefault("CCLAB_LOG_DIR", tempfile.mkdtemp(prefix="cclab-logs-"))
os.environ.setdefault("CCLAB_LOG_LEVEL", "WARNING")
