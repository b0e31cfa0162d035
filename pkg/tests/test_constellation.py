"""16-QAM alphabet invariants: energy, labeling, rings, set partition."""

import itertools

import numpy as np
import pytest

from chanmatch.constellation import RING_ENERGIES, build_16qam
from chanmatch.errors import InvalidPointError


def test_unit_energy(const):
    assert abs(np.mean(np.abs(const.points) ** 2) - 1.0) < 1e-12


def test_sixteen_distinct_points(const):
    assert len(np.unique(np.round(const.points, 12))) == 16


def test_zero_mean(const):
    assert abs(const.points.mean()) < 1e-12


def test_corner_energy_is_18_tenths(const):
    # (+-3, +-3)/sqrt(10): squared magnitude 18/10 exactly
    assert np.abs(const.points) .max() ** 2 == pytest.approx(1.8, abs=1e-12)


def test_ring_energies_and_multiplicities(const):
    energy = np.abs(const.points) ** 2
    for r, (e, mult) in enumerate(zip(RING_ENERGIES, (4, 8, 4))):
        members = const.ring_index == r
        assert members.sum() == mult
        assert np.allclose(energy[members], e, atol=1e-12)


def test_labels_are_bijective(const):
    ints = const.label_ints()
    assert sorted(ints) == list(range(16))


def test_map_bits_inverts_labels(const):
    for i in range(16):
        assert const.map_bits(const.labels[i]) == const.points[i]
    # and the full round trip
    assert np.array_equal(const.labels_of(const.map_bits(const.labels)), const.labels)


def test_map_bits_level0_separates_cosets(const):
    for bits in itertools.product((0, 1), repeat=3):
        p0 = const.map_bits(np.array((0,) + bits))
        p1 = const.map_bits(np.array((1,) + bits))
        assert const.labels_of(p0)[0][0] == 0
        assert const.labels_of(p1)[0][0] == 1


def test_map_bits_outputs_average_to_zero(const):
    all_labels = np.array(list(itertools.product((0, 1), repeat=4)))
    assert abs(const.map_bits(all_labels).mean()) < 1e-12


def test_level0_partition_doubles_min_squared_distance(const):
    d_all = _min_distance(const.points)
    for b in (0, 1):
        coset = const.points[const.labels[:, 0] == b]
        assert len(coset) == 8
        assert _min_distance(coset) == pytest.approx(np.sqrt(2) * d_all, rel=1e-12)


def test_level0_cosets_touch_every_ring(const):
    for b in (0, 1):
        rings = set(const.ring_index[const.labels[:, 0] == b].tolist())
        assert rings == {0, 1, 2}


def test_ring_of_examples(const):
    for e, expected in ((0.2, 0), (1.0, 1), (1.8, 2)):
        pt = const.points[np.argmin(np.abs(np.abs(const.points) ** 2 - e))]
        assert const.ring_of(pt) == expected


def test_ring_of_rejects_foreign_points(const):
    with pytest.raises(InvalidPointError):
        const.ring_of(0.1 + 0.1j)


def test_build_is_deterministic():
    a, b = build_16qam(), build_16qam()
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.labels, b.labels)


def _min_distance(points):
    d = np.abs(points[:, None] - points[None, :])
    return d[d > 1e-12].min()
