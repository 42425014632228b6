#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Benchmarking toolkit for ear recognition: hand crafted descriptors, matching and the identification protocol"""
from .const import *
from .dat_cls import *
from .table_reader import *
from .err import *
from . import imaging, descriptors, matching, protocol, evaluation, misc

__version__ = "1.0"
__license__ = "MIT"
