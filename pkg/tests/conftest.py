import numpy as np
import pytest

from wfm_ankle import (SimulationConfig, default_anterior_template, default_geometry,
                       default_params, default_posterior_template, muscle_length,
                       synthetic_split)


@pytest.fixture(scope="session")
def geoms():
    return (default_geometry("anterior"), default_geometry("posterior"))


@pytest.fixture(scope="session")
def params(geoms):
    return (default_params("anterior", float(muscle_length(0.0, geoms[0]))),
            default_params("posterior", float(muscle_length(0.0, geoms[1]))))


@pytest.fixture(scope="session")
def templates():
    return (default_anterior_template(), default_posterior_template())


@pytest.fixture(scope="session")
def curves_at_optima():
    return (default_anterior_template(0.05), default_posterior_template(0.10))


@pytest.fixture(scope="session")
def light_sim():
    """Coarse-but-valid integration settings to keep tests quick."""
    return SimulationConfig(steps_per_cycle=200, warmup_cycles=1, output_grid=101)


@pytest.fixture(scope="session")
def clean_split(curves_at_optima, params, geoms, light_sim):
    """Noise-free synthetic 4+4 dataset generated at the reported optima."""
    return synthetic_split(curves_at_optima, params, geoms, sim=light_sim,
                           seed=42, noise_sd=0.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)
