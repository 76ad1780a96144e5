"""Shared fixtures: a disk-backed profile store so expensive Monte Carlo
constructions are reused across test modules and across test sessions."""

from pathlib import Path

import pytest

from graywyner.polar import construct_profile_cached

CACHE_DIR = Path(__file__).parent / ".cache"


@pytest.fixture(scope="session")
def cache_dir():
    CACHE_DIR.mkdir(exist_ok=True)
    return CACHE_DIR


@pytest.fixture(scope="session")
def profile_store(cache_dir):
    def get(channel, block_len, beta=0.25, sample_count=256, seed=11):
        return construct_profile_cached(
            channel, block_len, cache_dir,
            beta=beta, sample_count=sample_count, seed=seed)
    return get
