"""Shared fixtures: model instances and a few expensive search artifacts."""

import numpy as np
import pytest

from sasakigeo import models, subriemannian as sr


@pytest.fixture(scope="session")
def s3():
    return models.get_model("s3")


@pytest.fixture(scope="session")
def s5():
    return models.get_model("s5")


@pytest.fixture(scope="session")
def heis():
    return models.get_model("heisenberg")


@pytest.fixture(scope="session")
def all_models(s3, s5, heis):
    return {"s3": s3, "s5": s5, "heisenberg": heis}


def converged_minimizer(model, seed):
    """A converged shortest connection between a seeded random pair."""
    rng = np.random.default_rng(seed)
    p, q = model.random_points(rng, 2)
    result = sr.cc_distance(model, p, q, sr.ShootingConfig(seed=seed))
    assert result.converged, f"search did not converge for seed {seed}"
    path = sr.geodesic_from_result(model, result)
    return path, result


@pytest.fixture(scope="session")
def s3_minimizer(s3):
    return converged_minimizer(s3, 101)


@pytest.fixture(scope="session")
def s5_minimizer(s5):
    return converged_minimizer(s5, 202)
