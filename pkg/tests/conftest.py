"""Shared fixtures: a standard 1D grid, a Gaussian pair, and a solved bridge."""

import numpy as np
import pytest

import bridgestab as bs


@pytest.fixture(scope="session")
def grid128():
    return bs.Grid.regular([(-6.0, 6.0)], [128])


@pytest.fixture(scope="session")
def gauss_pair(grid128):
    mu = bs.gaussian_measure(grid128, [-1.0], 0.9)
    nu = bs.gaussian_measure(grid128, [1.2], 0.8)
    return mu, nu


@pytest.fixture(scope="session")
def ou_kernel(grid128):
    return bs.GibbsKernel.ou(grid128, T=0.5, kappa=1.0)


@pytest.fixture(scope="session")
def ou_sol(gauss_pair, ou_kernel):
    mu, nu = gauss_pair
    return bs.solve(mu, nu, ou_kernel)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260825)
