#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""config for pytest"""

import numpy as np
import pytest

import pyUERC


def pytest_addoption(parser):
    """add commandline options to tests"""
    parser.addoption("--manifest", action="store", help="manifest csv of a real dataset, enables the dataset tests")
    parser.addoption("--images-root", action="store", help="directory the manifest paths are relative to")


@pytest.fixture
def manifest(request):
    """process commandline option 'manifest', skip the test if it is missing"""
    par = request.config.getoption("--manifest")
    if par is None:
        pytest.skip("needs --manifest pointing to a dataset")
    return par


@pytest.fixture
def images_root(request):
    """process commandline option 'images-root'"""
    par = request.config.getoption("--images-root")
    if par is None:
        par = "."
    return par


def make_entry(image_id: str, subject_id: str, **fields) -> pyUERC.ManifestEntry:
    """manifest entry with defaults for everything not given"""
    entry = pyUERC.ManifestEntry()
    entry.image_id = image_id
    entry.subject_id = subject_id
    entry.path = fields.pop("path", image_id + ".png")
    for key, value in fields.items():
        setattr(entry, key, value)
    return entry


@pytest.fixture
def entry_factory():
    """function that creates manifest entries"""
    return make_entry


@pytest.fixture
def rng():
    """seeded random generator"""
    return np.random.default_rng(pyUERC.DEFAULT_SEED)
