import numpy as np
import pytest

from triwalk.coin import (
    FAST_DECAY_STATE,
    SYMMETRIC_STATE,
    grover_coin,
    random_coin,
    recurrent_coin,
)
from triwalk.engine import WalkRun, available_backends, evolve


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def random_coins():
    return [random_coin(seed) for seed in range(20)]


_RUNS = {
    "grover_symmetric": (grover_coin, SYMMETRIC_STATE),
    "grover_fastdecay": (grover_coin, FAST_DECAY_STATE),
    "crec_symmetric": (recurrent_coin, SYMMETRIC_STATE),
}


@pytest.fixture(scope="session")
def long_runs():
    """T=300 series for the three reference walks, computed once per session."""
    cache = {}

    def get(name):
        if name not in cache:
            make_coin, psi = _RUNS[name]
            cache[name] = evolve(WalkRun(make_coin(), psi, 300))
        return cache[name]

    return get


def random_state(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    return v / np.linalg.norm(v)
