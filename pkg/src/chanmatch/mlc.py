"""Multi-level coded modulation over the set-partitioned 16-QAM alphabet.

Level 0 of the label carries an LDPC codeword; levels 1-3 are uncoded
within the inner scheme, giving 0.63 + 3 = 3.63 information bits per
symbol.  Decoding is multistage: a soft demapper produces level-0 LLRs
for the LDPC decoder, then the upper levels are decided by maximum
likelihood inside the level-0 coset selected by the decoded bit.

All likelihoods are exact (log-sum-exp over the 8-point cosets, no
max-log shortcut) and include the per-candidate normalizing constants,
which matters when the noise estimate assigns different variances to
different rings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constellation import RING_ENERGIES, Constellation
from .errors import FramingError, InvalidParameterError

#: Noise structures accepted by the estimators and the demapper.
STRUCTURES = ("scalar", "full", "per_ring")


@dataclass(frozen=True)
class NoiseEstimate:
    """Second-order noise statistics in the unit-energy symbol domain.

    Exactly one representation is active, selected by ``structure``:

    * ``"scalar"``: isotropic complex variance ``nu`` = E|n|^2.
    * ``"full"``: 2x2 real covariance ``cov`` of (Re n, Im n).
    * ``"per_ring"``: one isotropic variance per constellation ring,
      ``ring_nu[r]`` for squared magnitudes 0.2, 1.0, 1.8.

    ``fallback_rings`` flags rings whose variance was replaced by the
    pooled scalar estimate for lack of samples.
    """

    structure: str
    nu: float | None = None
    cov: np.ndarray | None = None
    ring_nu: np.ndarray | None = None
    n_samples: int = 0
    fallback_rings: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise InvalidParameterError(f"unknown structure {self.structure!r}")
        if self.structure == "scalar":
            if self.nu is None or self.nu <= 0:
                raise InvalidParameterError("scalar estimate needs nu > 0")
        elif self.structure == "full":
            c = self.cov
            if c is None or c.shape != (2, 2):
                raise InvalidParameterError("full estimate needs a 2x2 covariance")
            if abs(c[0, 1] - c[1, 0]) > 1e-12 * max(c[0, 0], c[1, 1]):
                raise InvalidParameterError("covariance must be symmetric")
            if c[0, 0] <= 0 or c[1, 1] <= 0 or np.linalg.det(c) <= 0:
                raise InvalidParameterError("covariance must be positive definite")
        else:
            r = self.ring_nu
            if r is None or np.shape(r) != (3,) or np.any(np.asarray(r) <= 0):
                raise InvalidParameterError("per-ring estimate needs 3 variances > 0")

    def mean_nu(self) -> float:
        """Isotropic-equivalent complex variance (trace of the covariance)."""
        if self.structure == "scalar":
            return float(self.nu)
        if self.structure == "full":
            return float(self.cov[0, 0] + self.cov[1, 1])
        # uniform input: 4 + 8 + 4 points on the three rings
        return float(np.dot(self.ring_nu, [0.25, 0.5, 0.25]))

    def rel_change(self, other: "NoiseEstimate") -> float:
        """Largest relative difference between two estimates of equal structure."""
        if self.structure != other.structure:
            return np.inf
        if self.structure == "scalar":
            return abs(self.nu - other.nu) / other.nu
        if self.structure == "full":
            return float(
                np.abs(self.cov - other.cov).max() / np.abs(other.cov).max()
            )
        a, b = np.asarray(self.ring_nu), np.asarray(other.ring_nu)
        return float(np.max(np.abs(a - b) / b))


@dataclass(frozen=True)
class MlcFrame:
    """One transmit frame: the LDPC codeword, the upper bits, the symbols."""

    ldpc_codeword: np.ndarray  # (n,) level-0 bits
    upper_bits: np.ndarray     # (3, n) levels 1-3
    symbols: np.ndarray        # (n,) complex


def mlc_encode(info_bits: np.ndarray, code, constellation: Constellation) -> MlcFrame:
    """Encode k + 3n information bits into n symbols.

    Layout of ``info_bits``: the first k bits enter the LDPC encoder
    (level 0), the remaining 3n fill levels 1, 2, 3 in that order.
    """
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    n, k = code.n, code.k
    if info_bits.shape != (k + 3 * n,):
        raise FramingError(f"expected {k + 3 * n} info bits, got {info_bits.shape}")
    codeword = code.encode(info_bits[:k])
    upper = info_bits[k:].reshape(3, n)
    symbols = remap(codeword, upper, constellation)
    return MlcFrame(codeword, upper, symbols)


def remap(level0_bits: np.ndarray, upper_bits: np.ndarray, constellation) -> np.ndarray:
    """Map decoded/decided bits back to symbols, exactly as the transmitter."""
    level0_bits = np.asarray(level0_bits, dtype=np.uint8)
    upper = np.asarray(upper_bits, dtype=np.uint8)
    n = level0_bits.shape[0]
    if upper.shape != (3, n):
        raise FramingError(f"upper bits must have shape (3, {n})")
    idx = (
        level0_bits.astype(np.int64) * 8
        + upper[0].astype(np.int64) * 4
        + upper[1].astype(np.int64) * 2
        + upper[2].astype(np.int64)
    )
    return constellation.point_by_label[idx]


def _neg_log_density(
    y: np.ndarray, candidates: np.ndarray, est: NoiseEstimate, constellation
) -> np.ndarray:
    """Exact -log p(y | x) for every candidate point, shape (len(y), C).

    Includes the normalizing constants so that per-ring variances weight
    candidates correctly.
    """
    d = y[:, None] - candidates[None, :]
    if est.structure == "scalar":
        return np.abs(d) ** 2 / est.nu + np.log(np.pi * est.nu)
    if est.structure == "full":
        cov = est.cov
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        inv = np.array(
            [[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]
        ) / det
        er, ei = d.real, d.imag
        q = 0.5 * (
            inv[0, 0] * er**2 + 2.0 * inv[0, 1] * er * ei + inv[1, 1] * ei**2
        )
        return q + np.log(2.0 * np.pi) + 0.5 * np.log(det)
    ring = constellation.ring_index[constellation.index_of(candidates)]
    nu_c = np.asarray(est.ring_nu)[ring]
    return np.abs(d) ** 2 / nu_c + np.log(np.pi * nu_c)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def llr_level0(
    y: np.ndarray, est: NoiseEstimate, constellation: Constellation
) -> np.ndarray:
    """Level-0 LLRs log Pr[b0 = 0 | y] / Pr[b0 = 1 | y] under a uniform prior.

    Exact 8-term marginalization over each level-0 coset, computed with
    log-sum-exp stabilization.
    """
    y = np.asarray(y, dtype=np.complex128)
    out = []
    for b in (0, 1):
        cand = constellation.points[constellation.coset_index[b]]
        out.append(_logsumexp(-_neg_log_density(y, cand, est, constellation), 1))
    return out[0] - out[1]


def decide_upper(
    y: np.ndarray,
    level0_bits: np.ndarray,
    est: NoiseEstimate,
    constellation: Constellation,
) -> np.ndarray:
    """Maximum-likelihood upper-level bits given the decoded level-0 bits.

    For each symbol the most likely point inside the selected 8-point
    coset wins; exact ties go to the lowest label value (the coset tables
    are stored in ascending label order, so the first argmin suffices).
    Returns a (3, n) bit array for levels 1-3.
    """
    y = np.asarray(y, dtype=np.complex128)
    level0_bits = np.asarray(level0_bits, dtype=np.uint8)
    n = y.shape[0]
    if level0_bits.shape != (n,):
        raise FramingError("level-0 bits and symbols must have equal length")
    upper = np.empty((3, n), dtype=np.uint8)
    for b in (0, 1):
        mask = level0_bits == b
        if not np.any(mask):
            continue
        cand_idx = constellation.coset_index[b]
        nld = _neg_log_density(
            y[mask], constellation.points[cand_idx], est, constellation
        )
        best = cand_idx[np.argmin(nld, axis=1)]
        upper[:, mask] = constellation.labels[best, 1:].T
    return upper
