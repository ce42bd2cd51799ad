import time
from types import SimpleNamespace

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def basis(*cols, M):
    """Stack unit vectors given as dicts {index: value} into an (M, R) array."""
    H = np.zeros((M, len(cols)))
    for j, c in enumerate(cols):
        for i, v in c.items():
            H[i, j] = v
    return H


REF_T_GRID = [4, 6, 8, 16, 32]
REF_SNR_GRID = [-10.0, -5.0, 0.0, 5.0, 10.0]


def _reference_sweep(tmp_path_factory, variable, values, threads):
    from close_subspaces.harness import SweepSpec, run_sweep
    from close_subspaces.model import ScenarioConfig

    out = tmp_path_factory.mktemp("sweeps") / f"{variable}.csv"
    spec = SweepSpec(ScenarioConfig(seed=2024), variable, values, n_trials=500, output_path=str(out))
    start = time.perf_counter()
    rows = run_sweep(spec, threads=threads)
    return SimpleNamespace(rows=rows, seconds=time.perf_counter() - start)


@pytest.fixture(scope="session")
def t_sweep(tmp_path_factory):
    """T sweep of the reference scenario at 0 dB, 500 trials per point, 4 workers."""
    return _reference_sweep(tmp_path_factory, "T", REF_T_GRID, threads=4)


@pytest.fixture(scope="session")
def snr_sweep(tmp_path_factory):
    """SNR sweep of the reference scenario at T = 6, 500 trials per point."""
    return _reference_sweep(tmp_path_factory, "snr_db", REF_SNR_GRID, threads=4)
