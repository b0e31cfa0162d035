"""Conditionally Gaussian surrogate of nonlinear WDM interference.

The channel is y = x + n in the unit-energy symbol domain.  Conditioned on
the transmitted symbol and on the average launch power p of all WDM
channels, n is circularly symmetric complex Gaussian.  The total noise
power obeys a cubic law in p,

    N(p) = sigma2_ase + kappa * p**3        [W, matched-filter domain]

so the effective symbol SNR is p / N(p) and has a unique interior maximum
when kappa > 0.  A dimensionless factor epsilon adds an optional dependence
on the instantaneous symbol energy:

    nu_i = N(p) / p * (1 + epsilon * (|x_i|**2 - 1))

with epsilon = 0 (the default) the noise is identical for all symbols.
Launch powers are quasi-static: one value per codeword block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .errors import InvalidParameterError


@dataclass(frozen=True)
class NlinParams:
    """Noise-law coefficients.

    Attributes:
        sigma2_ase: accumulated amplifier-noise variance in the
            matched-filter symbol domain (W).  Zero selects the noiseless
            limit together with ``kappa = 0``.
        kappa: cubic interference coefficient (W^-2).
        epsilon: instantaneous-energy dependence factor (dimensionless).
    """

    sigma2_ase: float
    kappa: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.sigma2_ase < 0 or self.kappa < 0 or self.epsilon < 0:
            raise InvalidParameterError(
                "sigma2_ase, kappa and epsilon must be non-negative"
            )


@dataclass(frozen=True)
class ChannelState:
    """Per-block channel condition: one launch power for the whole block."""

    p_true: float
    block_length: int

    def __post_init__(self):
        if self.p_true <= 0:
            raise InvalidParameterError("p_true must be positive")
        if self.block_length < 1:
            raise InvalidParameterError("block_length must be at least 1")


def effective_snr(params: NlinParams, p):
    """Symbol SNR p / (sigma2_ase + kappa * p**3) at launch power p (W).

    Accepts a scalar or an array of powers.  Returns ``inf`` in the
    noiseless limit (both coefficients zero).
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0):
        raise InvalidParameterError("launch power must be positive")
    denom = params.sigma2_ase + params.kappa * p**3
    with np.errstate(divide="ignore"):
        snr = np.where(denom > 0, p / np.where(denom > 0, denom, 1.0), np.inf)
    return float(snr) if snr.ndim == 0 else snr


def calibrate_kappa(sigma2_ase: float, p_star: float) -> float:
    """Cubic coefficient that puts the SNR maximum at ``p_star``.

    Setting d/dp [p / (sigma2_ase + kappa p^3)] = 0 at p_star gives the
    closed form kappa = sigma2_ase / (2 p_star^3); at the optimum the
    interference contributes exactly half the amplifier noise power.
    """
    if sigma2_ase <= 0 or p_star <= 0:
        raise InvalidParameterError("sigma2_ase and p_star must be positive")
    return sigma2_ase / (2.0 * p_star**3)


def noise_variances(params: NlinParams, p: float, x: np.ndarray) -> np.ndarray:
    """Per-symbol complex noise variance nu_i in the unit-energy domain."""
    if p <= 0:
        raise InvalidParameterError("launch power must be positive")
    scale = (params.sigma2_ase + params.kappa * p**3) / p
    factor = 1.0 + params.epsilon * (np.abs(x) ** 2 - 1.0)
    if np.any(factor <= 0):
        raise InvalidParameterError(
            "epsilon too large: noise variance would be non-positive "
            "on the inner ring"
        )
    return scale * factor


def transmit(
    x: np.ndarray,
    state: ChannelState,
    params: NlinParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Send symbols through one quasi-static block of the surrogate channel.

    The receiver is assumed to normalize the signal scale perfectly, so the
    output is x plus zero-mean circularly symmetric Gaussian noise whose
    variance follows the cubic law at ``state.p_true``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (state.block_length,):
        raise InvalidParameterError(
            f"expected {state.block_length} symbols, got {x.shape}"
        )
    nu = noise_variances(params, state.p_true, x)
    sigma = np.sqrt(nu / 2.0)
    n = sigma * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    return x + n


@dataclass(frozen=True)
class MiEstimate:
    """Monte Carlo mutual-information estimate with its standard error."""

    bits: float
    std_err: float
    n_samples: int


def mi_uniform(
    params: NlinParams,
    p: float,
    n_samples: int,
    rng: np.random.Generator,
    constellation: Constellation,
) -> MiEstimate:
    """Mutual information of the surrogate channel under uniform 16-QAM input.

    Monte Carlo over the exact conditional law: draws (x, y) pairs, then
    averages log2 p(y|x) - log2 p(y) with the per-symbol variances of the
    cubic noise law (the conditional densities are known exactly, so this
    estimator is unbiased).  Returns the estimate and its standard error.
    """
    if n_samples < 10_000:
        raise InvalidParameterError("n_samples must be at least 10^4")
    pts = constellation.points
    nu_pts = noise_variances(params, p, pts)

    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 200_000
    while done < n_samples:
        m = min(chunk, n_samples - done)
        idx = rng.integers(0, 16, size=m)
        x = pts[idx]
        nu_x = nu_pts[idx]
        noise = np.sqrt(nu_x / 2.0) * (
            rng.standard_normal(m) + 1j * rng.standard_normal(m)
        )
        y = x + noise
        # log densities against every candidate point
        d2 = np.abs(y[:, None] - pts[None, :]) ** 2
        logp = -d2 / nu_pts - np.log(np.pi * nu_pts)
        ref = logp.max(axis=1)
        log_py = ref + np.log(np.exp(logp - ref[:, None]).mean(axis=1))
        log_pyx = logp[np.arange(m), idx]
        info = (log_pyx - log_py) / np.log(2.0)
        total += info.sum()
        total_sq += (info**2).sum()
        done += m

    mean = float(total / n_samples)
    var = max(float(total_sq / n_samples) - mean**2, 0.0)
    return MiEstimate(mean, math.sqrt(var / n_samples), n_samples)
