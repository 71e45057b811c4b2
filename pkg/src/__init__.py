"""
编码缓存差距实验室（cclab）

集中式 / 去中心化编码缓存方案的比特级仿真、解析速率求值与速率比数值验证。
"""

__version__ = '1.0.0'
