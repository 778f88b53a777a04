"""Shared fixtures. Kernels are cached inside the library, so fixtures here
only pin down commonly reused configs."""

from __future__ import annotations

import numpy as np
import pytest

from phaseq import SystemConfig


@pytest.fixture
def qpsk8(snr_db: float = 6.0) -> SystemConfig:
    return SystemConfig(M=4, K=8, L=2, snr_db=6.0)


@pytest.fixture
def qpsk8_l3() -> SystemConfig:
    return SystemConfig(M=4, K=8, L=3, snr_db=6.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
