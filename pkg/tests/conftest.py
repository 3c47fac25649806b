import numpy as np
import pytest

from waxman.model import ModelSpec, fixture, generate, linear_spectrum


def random_problem(dim, seed, v_scale=1.0, t_min=1.0):
    return generate(ModelSpec(dim, linear_spectrum(dim, t_min, 1.0), v_scale, seed=seed, label=f"r{dim}"))


def identity_problem(dim=2, t_min=2.0):
    return fixture("identityV", dim=dim, t_min=t_min)


def seeded_sym(dim, seed):
    """Symmetric test matrix from numpy's generator (independent of the package PRNG)."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, (dim, dim))
    return (a + a.T) / 2.0


@pytest.fixture(scope="session")
def easy20():
    return fixture("easy20")


@pytest.fixture(scope="session")
def hard20():
    return fixture("hard20")
