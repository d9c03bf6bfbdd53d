"""Shared fixtures: filters and PDPs reused across the suite."""

import numpy as np
import pytest

from fbmc_mmimo import design_phydyas, exponential_pdp, matched_filter


@pytest.fixture(scope="session")
def phydyas16():
    return design_phydyas(16, 4)


@pytest.fixture(scope="session")
def phydyas64():
    return design_phydyas(64, 4)


@pytest.fixture(scope="session")
def matched64(phydyas64):
    return matched_filter(phydyas64)


@pytest.fixture(scope="session")
def pdp_desk():
    """Desk-scale exponential profile (alpha=0.1, L=20)."""
    return exponential_pdp(0.1, 20)


@pytest.fixture(scope="session")
def pdp_paper():
    """Full-scale exponential profile (alpha=0.1, L=40)."""
    return exponential_pdp(0.1, 40)


def brute_force_inner(a_samples, a_start, b_samples, b_start):
    """Offset-aware Re{sum a b*} computed with plain loops-free numpy,
    independent of the library's alignment code."""
    lo = max(a_start, b_start)
    hi = min(a_start + len(a_samples), b_start + len(b_samples))
    if hi <= lo:
        return 0.0
    a = np.asarray(a_samples)[lo - a_start:hi - a_start]
    b = np.asarray(b_samples)[lo - b_start:hi - b_start]
    return float(np.real(np.sum(a * np.conj(b))))
