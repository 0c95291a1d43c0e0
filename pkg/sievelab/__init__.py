# -*- coding: utf-8 -*-
"""
Bernoulli sieve 蒙特卡洛实验室
模拟筛子本身与各极限过程，并对空盒数 L_n 的弱收敛做统计检验
"""

__version__ = "0.1.0"
