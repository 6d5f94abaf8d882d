"""Shared fixtures: the parameter points every test file keeps reaching for."""

import numpy as np
import pytest

from dynsir import ModelSpec


@pytest.fixture(scope="session")
def spec_slow_edge():
    """One-type slow-edge point with R0 = 2; the workhorse of the suite."""
    return ModelSpec(k=1, p=1.0, lam=3.0, mu=1.0, beta=1.0, gamma=1.0,
                     kappa_lam=-1.0, kappa_mu=0.0, kappa_beta=0.0)


@pytest.fixture(scope="session")
def spec_homogeneous():
    """One-type homogeneous point, R0 = beta*lam/((lam+mu)*gamma) = 1.5."""
    return ModelSpec(k=1, p=1.0, lam=3.0, mu=1.0, beta=2.0, gamma=1.0,
                     kappa_lam=0.0, kappa_mu=0.0, kappa_beta=-1.0)


@pytest.fixture(scope="session")
def spec_two_type():
    """Two types, one slow-edge channel and three homogeneous ones."""
    lam = np.array([[3.0, 2.0], [2.0, 3.0]])
    mu = np.array([[1.0, 1.0], [1.0, 1.0]])
    beta = np.array([[1.0, 1.5], [1.5, 1.0]])
    kl = np.array([[-1.0, 0.0], [0.0, -1.0]])
    kb = np.array([[0.0, -1.0], [-1.0, 0.0]])
    return ModelSpec(k=2, p=(0.5, 0.5), lam=lam, mu=mu, beta=beta,
                     gamma=(1.0, 1.2), kappa_lam=kl, kappa_mu=0.0, kappa_beta=kb)


@pytest.fixture(scope="session")
def spec_subcritical():
    # homogeneous with R0 = 0.5: conditioning can never succeed
    return ModelSpec(k=1, p=1.0, lam=1.0, mu=1.0, beta=1.0, gamma=1.0,
                     kappa_lam=0.0, kappa_mu=0.0, kappa_beta=-1.0)


@pytest.fixture
def write_config(tmp_path):
    """Factory dropping a TOML config file and returning its path."""

    def _write(text, name="run.toml"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


CANONICAL_TOML = """\
[model]
k = 1
p = 1.0
lambda = 3.0
mu = 1.0
beta = 1.0
gamma = 1.0
kappa_lambda = -1.0
kappa_mu = 0.0
kappa_beta = 0.0

[experiment]
n_list = [300, 900]
runs_per_n = 10
master_seed = 99
pin_level = 0.01
window = [-1.0, 3.0]
grid_step = 0.1
"""


@pytest.fixture
def canonical_toml(write_config):
    return write_config(CANONICAL_TOML)
