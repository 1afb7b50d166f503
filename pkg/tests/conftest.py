from __future__ import annotations

import numpy as np
import pytest

from cpflow import (
    Background,
    PackingMetric,
    genus2_surface,
    icosahedron,
    is_admissible,
    octahedron,
    tetrahedron,
    triangulated_torus,
)


@pytest.fixture(scope="session")
def tetra():
    return tetrahedron()


@pytest.fixture(scope="session")
def octa():
    return octahedron()


@pytest.fixture(scope="session")
def icosa():
    return icosahedron()


@pytest.fixture(scope="session")
def genus2():
    return genus2_surface()


@pytest.fixture(scope="session")
def torus():
    return triangulated_torus(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


def random_metric(complex, rng, background=Background.HYPERBOLIC,
                  radius_range=(0.1, 5.0), inversive_range=(0.0, 3.0)):
    """One random metric, not necessarily admissible."""
    radii = np.exp(rng.uniform(np.log(radius_range[0]), np.log(radius_range[1]),
                               complex.vertex_count))
    inversive = rng.uniform(*inversive_range, complex.edge_count)
    return PackingMetric(background, inversive, radii)


def random_admissible_metric(complex, rng, background=Background.HYPERBOLIC,
                             radius_range=(0.1, 5.0), inversive_range=(0.0, 3.0),
                             max_tries=2000):
    """Rejection-sample a metric with every face strictly admissible."""
    for _ in range(max_tries):
        metric = random_metric(complex, rng, background, radius_range, inversive_range)
        if is_admissible(complex, metric)[0]:
            return metric
    raise AssertionError("could not sample an admissible metric")
