import numpy as np
import pytest

from koopbots.config import RunConfig
from koopbots.harness import run_identification


@pytest.fixture(scope="session")
def phase1_runs():
    """Phase I for every variant, computed once per session."""
    out = {}
    for variant in ("linear", "bilinear", "decentralized-bilinear"):
        cfg = RunConfig(variant=variant)
        model, log, X = run_identification(cfg)
        out[variant] = (cfg, model, log, X)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


from hypothesis import settings

# JIT compilation on first call and a single shared CPU make wall-clock deadlines flaky
settings.register_profile("koopbots", deadline=None)
settings.load_profile("koopbots")
