"""Power unit conversions."""

import numpy as np


def dbm_to_watt(p_dbm):
    """dBm to watts; accepts scalars or arrays."""
    return 1e-3 * 10.0 ** (np.asarray(p_dbm, dtype=np.float64) / 10.0)


def watt_to_dbm(p_watt):
    """Watts to dBm; accepts scalars or arrays."""
    return 10.0 * np.log10(np.asarray(p_watt, dtype=np.float64) / 1e-3)
