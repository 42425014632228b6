#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""command line scripts for pyUERC"""
