"""Shared fixtures and small builders for the test suite."""

import pytest

from microfrac.geometry import MicroGeometry
from microfrac.lattice import build_lattice


def make_lattice(k=1, n=8, rho=0.05):
    return build_lattice(MicroGeometry(rho=rho), k, n)


@pytest.fixture(scope="session")
def lattice_k5_n32():
    """The canonical production lattice, shared across suites."""
    return make_lattice(k=5, n=32)


@pytest.fixture(scope="session")
def lattice_k1_n8():
    return make_lattice(k=1, n=8)


@pytest.fixture(scope="session")
def lattice_k3_n32():
    return make_lattice(k=3, n=32)
