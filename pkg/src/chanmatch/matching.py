"""Adaptive turbo decoder with three noise-knowledge strategies.

* ``fixed``: soft information always uses the noise statistics implied by
  the optimal launch power, no matter what the channel currently does.
* ``genie``: a genie hands the decoder the true statistics (perfect CSI).
* ``matched``: the decoder starts from the fixed statistics, then
  re-estimates them from its own decisions: remap the current hard
  decisions to symbols, take maximum-likelihood noise statistics of the
  residuals, recompute LLRs and run the LDPC decoder again, up to r2
  times with r1 BP iterations per pass.

For a fair compute comparison the fixed and genie strategies receive a
single BP run of r1 * (r2 + 1) iterations, the same total budget the
matched decoder may spend across its passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation
from .errors import InvalidParameterError
from .ldpc import LdpcCode
from .mlc import NoiseEstimate, decide_upper, llr_level0, remap
from .surrogate import NlinParams, effective_snr

STRATEGIES = ("fixed", "genie", "matched")

#: Variance floor guarding the zero-residual degenerate case.
NU_MIN_DEFAULT = 1e-6

#: Relative estimate change below which a converged matched pass stops early.
_EST_TOL = 1e-3

_MIN_RING_SAMPLES = 10


@dataclass(frozen=True)
class DecoderConfig:
    """Strategy selection and iteration budget for :func:`turbo_decode`."""

    strategy: str
    r1: int
    r2: int
    nominal_estimate: NoiseEstimate
    estimate_structure: str = "scalar"
    nu_min: float = NU_MIN_DEFAULT

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidParameterError(f"unknown strategy {self.strategy!r}")
        if self.r1 < 1 or self.r2 < 0:
            raise InvalidParameterError("need r1 >= 1 and r2 >= 0")

    @property
    def bp_budget(self) -> int:
        """Total BP iterations available to any strategy."""
        return self.r1 * (self.r2 + 1)


@dataclass
class PassDiagnostics:
    """Per-pass trace of the matched decoder."""

    syndrome_weight: int
    bp_iters: int
    estimate: NoiseEstimate


@dataclass
class DecodeResult:
    """Decoded information bits and decoder diagnostics.

    ``info_bits`` mirrors the transmit layout: k level-0 information bits
    followed by the 3n upper-level bits.
    """

    info_bits: np.ndarray
    level0_codeword: np.ndarray
    upper_bits: np.ndarray
    converged: bool
    passes_used: int
    bp_iters_used: int
    final_estimate: NoiseEstimate
    diagnostics: list[PassDiagnostics] = field(default_factory=list)


def ml_estimate(
    y: np.ndarray,
    x_hat: np.ndarray,
    structure: str,
    constellation: Constellation,
    nu_min: float = NU_MIN_DEFAULT,
) -> NoiseEstimate:
    """Maximum-likelihood noise statistics of the residuals y - x_hat.

    Residuals are assumed zero-mean.  ``structure`` selects a scalar
    variance, a full 2x2 covariance, or one variance per constellation
    ring of the reference symbols; rings holding fewer than 10 samples
    fall back to the pooled scalar value and are flagged.
    All variances (eigenvalues, for the covariance) are floored so the
    estimate stays usable when the residuals vanish.
    """
    y = np.asarray(y, dtype=np.complex128)
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    if y.shape != x_hat.shape or y.size < 100:
        raise InvalidParameterError("need equal-length inputs of at least 100 symbols")
    e = y - x_hat
    n = e.size
    nu_scalar = max(float(np.mean(np.abs(e) ** 2)), nu_min)

    if structure == "scalar":
        return NoiseEstimate("scalar", nu=nu_scalar, n_samples=n)

    if structure == "full":
        v = np.stack([e.real, e.imag])
        cov = (v @ v.T) / n
        w, q = np.linalg.eigh(cov)
        w = np.maximum(w, nu_min / 2.0)
        cov = (q * w) @ q.T
        cov = 0.5 * (cov + cov.T)
        return NoiseEstimate("full", cov=cov, n_samples=n)

    if structure == "per_ring":
        ring = constellation.ring_index[constellation.index_of(x_hat)]
        ring_nu = np.empty(3)
        fallback = []
        for r in range(3):
            sel = ring == r
            if sel.sum() < _MIN_RING_SAMPLES:
                ring_nu[r] = nu_scalar
                fallback.append(r)
            else:
                ring_nu[r] = max(float(np.mean(np.abs(e[sel]) ** 2)), nu_min)
        return NoiseEstimate(
            "per_ring", ring_nu=ring_nu, n_samples=n, fallback_rings=tuple(fallback)
        )

    raise InvalidParameterError(f"unknown structure {structure!r}")


def make_nominal(
    params: NlinParams,
    p_opt: float,
    structure: str = "scalar",
    constellation: Constellation | None = None,
    nu_min: float = NU_MIN_DEFAULT,
) -> NoiseEstimate:
    """Noise statistics implied by the surrogate law at launch power ``p_opt``."""
    if p_opt <= 0:
        raise InvalidParameterError("p_opt must be positive")
    nu = max(1.0 / effective_snr(params, p_opt), nu_min)
    if structure == "scalar":
        return NoiseEstimate("scalar", nu=nu)
    if structure == "full":
        return NoiseEstimate("full", cov=np.eye(2) * (nu / 2.0))
    if structure == "per_ring":
        from .constellation import RING_ENERGIES

        factors = 1.0 + params.epsilon * (np.array(RING_ENERGIES) - 1.0)
        if np.any(factors <= 0):
            raise InvalidParameterError("epsilon too large for per-ring nominal")
        return NoiseEstimate("per_ring", ring_nu=np.maximum(nu * factors, nu_min))
    raise InvalidParameterError(f"unknown structure {structure!r}")


def turbo_decode(
    y: np.ndarray,
    cfg: DecoderConfig,
    code: LdpcCode,
    constellation: Constellation,
    genie_estimate: NoiseEstimate | None = None,
) -> DecodeResult:
    """Decode one received block under the configured strategy.

    A matched run with r2 = 0 is definitionally identical to the fixed
    strategy, and at the nominal power the genie estimate coincides with
    the nominal one, making fixed and genie bit-identical there.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (code.n,):
        raise InvalidParameterError(f"expected {code.n} symbols")

    if cfg.strategy == "genie":
        if genie_estimate is None:
            raise InvalidParameterError("genie strategy requires genie_estimate")
        est = genie_estimate
    else:
        est = cfg.nominal_estimate

    if cfg.strategy in ("fixed", "genie"):
        out = code.decode_bp(llr_level0(y, est, constellation), cfg.bp_budget)
        diag = [PassDiagnostics(int(code.syndrome(out.bits).sum()), out.iters_used, est)]
        return _finish(y, out, est, 1, out.iters_used, diag, code, constellation)

    # matched: pass 0 with the nominal estimate, then re-estimation passes
    out = code.decode_bp(llr_level0(y, est, constellation), cfg.r1)
    iters = out.iters_used
    diag = [PassDiagnostics(int(code.syndrome(out.bits).sum()), out.iters_used, est)]
    passes = 1
    for _ in range(cfg.r2):
        upper = decide_upper(y, out.bits, est, constellation)
        x_hat = remap(out.bits, upper, constellation)
        new_est = ml_estimate(
            y, x_hat, cfg.estimate_structure, constellation, cfg.nu_min
        )
        stable = new_est.rel_change(est) < _EST_TOL
        est = new_est
        if out.converged and stable:
            break
        out = code.decode_bp(llr_level0(y, est, constellation), cfg.r1)
        iters += out.iters_used
        passes += 1
        diag.append(
            PassDiagnostics(int(code.syndrome(out.bits).sum()), out.iters_used, est)
        )
    return _finish(y, out, est, passes, iters, diag, code, constellation)


def _finish(y, out, est, passes, iters, diag, code, constellation) -> DecodeResult:
    upper = decide_upper(y, out.bits, est, constellation)
    info = np.concatenate([out.bits[: code.k], upper.ravel()])
    return DecodeResult(
        info_bits=info,
        level0_codeword=out.bits,
        upper_bits=upper,
        converged=out.converged,
        passes_used=passes,
        bp_iters_used=iters,
        final_estimate=est,
        diagnostics=diag,
    )
