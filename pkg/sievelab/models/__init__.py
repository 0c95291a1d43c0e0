# -*- coding: utf-8 -*-
"""
数据模型模块
包含所有的数据模型定义
"""
