# -*- coding: utf-8 -*-
"""
工具模块
包含各种工具函数和辅助类
"""