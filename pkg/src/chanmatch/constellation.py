"""Unit-energy 16-QAM alphabet with set-partition labeling and ring structure.

The points are the (±1, ±3) × (±1, ±3) grid scaled by 1/sqrt(10), so the
average symbol energy is exactly 1 and the squared magnitudes fall on the
three rings 0.2, 1.0 and 1.8 with multiplicities 4, 8 and 4.

Labels are four bits (b0, b1, b2, b3).  Writing each point as
(2u - 3, 2v - 3) / sqrt(10) with u, v in {0..3}, the label is

    b0 = (u + v) mod 2      level 0, the coded level
    b1 = u mod 2
    b2 = u >> 1
    b3 = v >> 1

b0 splits the grid into two checkerboard cosets of 8 points whose minimum
distance is sqrt(2) times the full-constellation minimum distance; (b0, b1)
refines each coset into four 4-point sub-lattices that double the distance
again.  This is the usual set-partition chain with the most vulnerable bit
first, which is the level that carries the inner LDPC code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPointError

#: Squared magnitudes of the three rings, ordered inner to outer.
RING_ENERGIES = (0.2, 1.0, 1.8)

_POINT_TOL = 1e-9


@dataclass(frozen=True)
class Constellation:
    """Immutable 16-QAM alphabet.

    Attributes:
        points: (16,) complex points, unit average energy.
        labels: (16, 4) bit labels, column 0 is the level-0 (coded) bit.
        ring_index: (16,) ring of each point, 0 = inner, 2 = outer.
        point_by_label: (16,) points indexed by the label integer
            8*b0 + 4*b1 + 2*b2 + b3.
        coset_index: (2, 8) point indices of each level-0 coset, ordered by
            ascending label integer (this ordering is the documented
            tie-break for maximum-likelihood decisions).
    """

    points: np.ndarray
    labels: np.ndarray
    ring_index: np.ndarray
    point_by_label: np.ndarray
    coset_index: np.ndarray

    def label_ints(self) -> np.ndarray:
        """Labels packed as integers 8*b0 + 4*b1 + 2*b2 + b3."""
        return (self.labels * np.array([8, 4, 2, 1], dtype=np.uint8)).sum(axis=1)

    def map_bits(self, bits: np.ndarray) -> np.ndarray:
        """Map 4-bit labels to points.

        Args:
            bits: (..., 4) array of 0/1 values; bits[..., 0] is level 0.

        Returns:
            (...,) complex array of constellation points.
        """
        bits = np.asarray(bits)
        if bits.shape[-1] != 4:
            raise InvalidPointError("labels must have 4 bits")
        idx = (bits * np.array([8, 4, 2, 1], dtype=np.int64)).sum(axis=-1)
        return self.point_by_label[idx]

    def labels_of(self, x: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`map_bits` for exact constellation points."""
        return self.labels[self.index_of(x)]

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """Index of each value in ``points``; rejects non-constellation input."""
        x = np.atleast_1d(np.asarray(x, dtype=np.complex128))
        d = np.abs(x[..., None] - self.points)
        idx = d.argmin(axis=-1)
        if np.any(np.take_along_axis(d, idx[..., None], -1) > _POINT_TOL):
            raise InvalidPointError("value is not a constellation point")
        return idx

    def ring_of(self, x: complex | np.ndarray) -> int | np.ndarray:
        """Ring index (by increasing squared magnitude) of a point."""
        r = self.ring_index[self.index_of(x)]
        return int(r[0]) if np.isscalar(x) or np.ndim(x) == 0 else r


def build_16qam() -> Constellation:
    """Construct the unit-energy 16-QAM alphabet with set-partition labels."""
    points = np.empty(16, dtype=np.complex128)
    labels = np.empty((16, 4), dtype=np.uint8)
    i = 0
    for u in range(4):
        for v in range(4):
            points[i] = complex(2 * u - 3, 2 * v - 3) / np.sqrt(10.0)
            labels[i] = ((u + v) & 1, u & 1, u >> 1, v >> 1)
            i += 1

    energy = np.abs(points) ** 2
    ring_index = np.searchsorted(
        np.array(RING_ENERGIES[:-1]) + 0.2, energy
    ).astype(np.int8)

    label_int = (labels * np.array([8, 4, 2, 1], dtype=np.int64)).sum(axis=1)
    point_by_label = np.empty(16, dtype=np.complex128)
    point_by_label[label_int] = points

    coset_index = np.empty((2, 8), dtype=np.int64)
    for b in (0, 1):
        members = np.flatnonzero(labels[:, 0] == b)
        coset_index[b] = members[np.argsort(label_int[members])]

    for arr in (points, labels, ring_index, point_by_label, coset_index):
        arr.setflags(write=False)
    return Constellation(points, labels, ring_index, point_by_label, coset_index)
