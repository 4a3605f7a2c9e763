import numpy as np
import pytest

from crgeom import yamabe as ym
from crgeom.contact import sample_points, sphere_cayley
from crgeom.engine import analyze


@pytest.fixture(scope="session")
def sphere1():
    return sphere_cayley(1)


@pytest.fixture(scope="session")
def sphere2():
    return sphere_cayley(2)


@pytest.fixture(scope="session")
def rule():
    return ym.product_rule(16, 32)


@pytest.fixture(scope="session")
def basis(rule):
    return ym.build_basis(rule, 4)


@pytest.fixture(scope="session")
def round_state(sphere1):
    from crgeom.contact import ConstantFactor
    pts = sample_points(sphere1, 40, seed=0)
    return analyze(sphere1, ConstantFactor(1.0), pts, 4)


