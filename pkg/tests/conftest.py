import pytest

from fishbone.integrator import IntegratorConfig, make_initial, simulate
from fishbone.model import ModelSpec


@pytest.fixture(scope="session")
def run_standard():
    """Memoized standard runs (fixed RK4, h=1e-3), shared across tests.

    The integrator is bit-deterministic, so caching by parameters is safe.
    """
    cache = {}

    def run(variant, delta, sigma, onset_gain=100.0, t_end=200.0):
        key = (variant, delta, sigma, onset_gain, t_end)
        if key not in cache:
            spec = ModelSpec(variant, delta=delta)
            config = IntegratorConfig(t_end=t_end)
            cache[key] = simulate(spec, make_initial(sigma), config, onset_gain)
        return cache[key]

    return run
