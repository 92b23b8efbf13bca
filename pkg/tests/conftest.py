"""Shared fixtures: the expensive solver sweeps are computed once per session."""

import time

import pytest

from optdesign import (
    EXP1,
    BetaGrid,
    ParameterPrior,
    solve_bayes,
    solve_maximin,
)

MAXIMIN_BS = (10, 40, 50, 100, 200)
BAYES_BS = (10, 40, 50, 100, 200, 300, 3000)


@pytest.fixture(scope="session")
def maximin_results():
    """(design, certificate, seconds) per parameter-range width for the
    scalar exponential model."""
    out = {}
    for B in MAXIMIN_BS:
        t0 = time.perf_counter()
        design, cert = solve_maximin(EXP1, BetaGrid(1.0, float(B)))
        out[B] = (design, cert, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def bayes_results():
    """(design, certificate) per uniform-prior width for the scalar
    exponential model."""
    return {
        B: solve_bayes(EXP1, ParameterPrior.uniform(1.0, float(B)))
        for B in BAYES_BS
    }
