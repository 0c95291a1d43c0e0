# -*- coding: utf-8 -*-
"""
数值核心模块
包含因子分布、筛子引擎、泊松化、极限过程与统计检验
"""
