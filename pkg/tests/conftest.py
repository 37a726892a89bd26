"""Shared corpus systems and independent numeric oracles."""

from __future__ import annotations

import random

import pytest

from msfield.lagrangian import LagrangianSystem
from msfield.symexpr import evaluate, sample_point
from msfield.symexpr.zero import DEFAULT_OPTIONS


@pytest.fixture(scope="session")
def oscillator():
    return LagrangianSystem(1, 1, "v_1_1^2/2 - y_1^2/2")


@pytest.fixture(scope="session")
def free_particle():
    return LagrangianSystem(1, 1, "v_1_1^2/2")


@pytest.fixture(scope="session")
def affine():
    return LagrangianSystem(1, 1, "v_1_1")


@pytest.fixture(scope="session")
def klein_gordon():
    """Symbolic mass parameter mu."""
    return LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2 - mu^2*y_1^2/2", params=("mu",))


@pytest.fixture(scope="session")
def klein_gordon_unit():
    """Mass baked to 1 (numeric work)."""
    return LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2 - y_1^2/2")


@pytest.fixture(scope="session")
def wave():
    return LagrangianSystem(2, 1, "(v_1_1^2 - v_1_2^2)/2")


@pytest.fixture(scope="session")
def rank1():
    return LagrangianSystem(2, 1, "(v_1_1 + v_1_2)^2/2")


def fd_derivative(e, s, point, h: float = 1e-6) -> float:
    """Independent central-difference oracle for partial derivatives."""
    up = dict(point)
    dn = dict(point)
    up[s] = point[s] + h
    dn[s] = point[s] - h
    return (evaluate(e, up) - evaluate(e, dn)) / (2.0 * h)


def random_points(e, count: int, seed: int = 7):
    """Seeded sample points for every symbol of `e`."""
    rng = random.Random(seed)
    symbols = e.symbols()
    return [sample_point(symbols, rng, DEFAULT_OPTIONS) for _ in range(count)]
