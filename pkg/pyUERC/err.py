#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Exception for pyUERC"""


class UERCStateException(Exception):
    """raised for inconsistent protocol states, e.g. overlapping partitions or degenerate score rows"""


class UERCDataException(Exception):
    """raised if data content could not be parsed or is inconsistent"""


class UERCInputException(Exception):
    """raised if input parameters or arguments are invalid"""


class UERCFormatException(Exception):
    """raised when a descriptor or matrix file violates its format"""
