import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eigenlab import domain_mesh as dm
from eigenlab.eigensolver import first_eigen
from eigenlab.rearrangement import distribution_function


@pytest.fixture(scope="session")
def euclidean():
    return dm.ConformalSurface.euclidean()


@pytest.fixture(scope="session")
def poincare():
    return dm.ConformalSurface.poincare(1.0)


@pytest.fixture(scope="session")
def disk_result(euclidean):
    mesh = dm.triangulate(dm.circle_curve(1.0, 512), 0.02)
    return first_eigen(mesh, euclidean)


@pytest.fixture(scope="session")
def square_result(euclidean):
    mesh = dm.triangulate(dm.square_curve(1.0, 50), 0.02)
    return first_eigen(mesh, euclidean)

@pytest.fixture(scope="session")
def disk_profile(disk_result, euclidean):
    return distribution_function(disk_result, euclidean, 256)


@pytest.fixture(scope="session")
def square_profile(square_result, euclidean):
    return distribution_function(square_result, euclidean, 256)


@pytest.fixture(scope="session")
def poincare_polygon_result(poincare):
    rng = np.random.default_rng(7)
    curve = dm.random_convex_curve(rng, n_support=10, n_vertices=320, radius=0.55)
    mesh = dm.triangulate(curve, 0.02)
    return first_eigen(mesh, poincare)


@pytest.fixture(scope="session")
def poincare_polygon_profile(poincare_polygon_result, poincare):
    return distribution_function(poincare_polygon_result, poincare, 256)


@pytest.fixture(scope="session")
def hyperbolic_disk_result(poincare):
    curve = dm.geodesic_disk_curve(1.0, 1.0, 512)
    mesh = dm.triangulate(curve, 0.01)
    return first_eigen(mesh, poincare)


@pytest.fixture(scope="session")
def hyperbolic_disk_profile(hyperbolic_disk_result, poincare):
    return distribution_function(hyperbolic_disk_result, poincare, 256)
