import numpy as np
import pytest

from chanmatch import ssfm
from chanmatch.constellation import build_16qam
from chanmatch.ldpc import construct_code
from chanmatch.surrogate import NlinParams, calibrate_kappa
from chanmatch.units import dbm_to_watt

P_OPT_DBM = -6.8


@pytest.fixture(scope="session")
def const():
    return build_16qam()


@pytest.fixture(scope="session")
def paper_sigma2():
    """Accumulated ASE variance of the full-scale 90-span link (W)."""
    full = ssfm.FiberSystemParams()
    return full.n_spans * ssfm.ase_psd(full) * full.symbol_rate_baud


@pytest.fixture(scope="session")
def calibrated_params(paper_sigma2):
    """Cubic noise law with its SNR peak at -6.8 dBm."""
    kappa = calibrate_kappa(paper_sigma2, float(dbm_to_watt(P_OPT_DBM)))
    return NlinParams(paper_sigma2, kappa)


@pytest.fixture(scope="session")
def code1000():
    return construct_code(1000, seed=3)


@pytest.fixture(scope="session")
def code2000():
    return construct_code(2000, seed=1)


@pytest.fixture(scope="session")
def code8000():
    return construct_code(8000, seed=1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(123)
