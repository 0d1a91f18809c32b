"""
Muskat 界面方程求解器
稳定区域下 Muskat 问题的周线动力学模拟、轨迹诊断与变分恒等式验证
"""

__version__ = "0.1.0"
