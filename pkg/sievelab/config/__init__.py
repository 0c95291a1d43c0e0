# -*- coding: utf-8 -*-
"""
配置管理模块
包含系统配置和场景默认配置
"""
