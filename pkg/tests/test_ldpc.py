"""Code construction, systematic encoding, and sum-product decoding."""

import numpy as np
import pytest

from chanmatch.errors import InvalidParameterError
from chanmatch.ldpc import L_MAX, construct_code, from_alist


def _dense(code):
    h = np.zeros((code.m, code.n), dtype=np.uint8)
    for i, cols in enumerate(code.check_neighbors):
        h[i, cols] = 1
    return h


class TestConstruction:
    def test_rate_is_exact(self, code2000):
        assert code2000.k == 1260
        assert code2000.rate == pytest.approx(0.63, abs=1e-12)

    def test_paper_scale_dimensions(self, code8000):
        assert (code8000.n, code8000.k) == (8000, 5040)
        assert code8000.rate == pytest.approx(0.63, abs=1e-12)

    def test_column_weight_regular(self, code2000):
        assert np.all(code2000.col_degrees == 3)

    def test_row_degrees_cluster_around_eight(self, code2000):
        degs = set(code2000.row_degrees.tolist())
        assert degs <= {8, 9}
        assert np.mean(code2000.row_degrees) == pytest.approx(3 / 0.37, abs=0.05)

    def test_no_four_cycles(self, code2000):
        h = _dense(code2000).astype(np.float32)
        overlap = h @ h.T
        np.fill_diagonal(overlap, 0)
        assert overlap.max() <= 1

    def test_deterministic_for_seed(self):
        a = construct_code(1000, seed=9)
        b = construct_code(1000, seed=9)
        assert all(
            np.array_equal(x, y)
            for x, y in zip(a.check_neighbors, b.check_neighbors)
        )

    def test_full_row_rank_via_encoder(self, code1000, rng):
        # a working systematic encoder implies the finalize rank check passed
        cw = code1000.encode(rng.integers(0, 2, code1000.k).astype(np.uint8))
        assert not code1000.syndrome(cw).any()

    def test_rejects_short_blocks(self):
        with pytest.raises(InvalidParameterError):
            construct_code(500)


class TestEncoding:
    def test_all_zero_maps_to_all_zero(self, code1000):
        cw = code1000.encode(np.zeros(code1000.k, dtype=np.uint8))
        assert not cw.any()

    def test_systematic_prefix_and_zero_syndrome(self, code1000, rng):
        u = rng.integers(0, 2, code1000.k).astype(np.uint8)
        cw = code1000.encode(u)
        assert np.array_equal(cw[: code1000.k], u)
        assert not code1000.syndrome(cw).any()

    def test_linearity(self, code1000, rng):
        u1 = rng.integers(0, 2, code1000.k).astype(np.uint8)
        u2 = rng.integers(0, 2, code1000.k).astype(np.uint8)
        s = (code1000.encode(u1) ^ code1000.encode(u2))
        assert np.array_equal(code1000.encode(u1 ^ u2), s)
        assert not code1000.syndrome(s).any()


class TestDecoding:
    def test_saturated_consistent_input_converges_immediately(self, code1000):
        out = code1000.decode_bp(np.full(code1000.n, L_MAX), max_iters=10)
        assert out.converged and out.iters_used == 1
        assert not out.bits.any()

    def test_one_percent_flips_recovered(self, code2000):
        rng = np.random.default_rng(17)
        cw = code2000.encode(rng.integers(0, 2, code2000.k).astype(np.uint8))
        llr = np.where(cw == 0, 2.0, -2.0)
        flips = rng.choice(code2000.n, size=code2000.n // 100, replace=False)
        llr[flips] *= -1.0
        out = code2000.decode_bp(llr, max_iters=20)
        assert out.converged
        assert np.array_equal(out.bits, cw)

    def test_all_zero_llrs_do_not_converge(self, code1000):
        out = code1000.decode_bp(np.zeros(code1000.n), max_iters=5)
        assert not out.converged
        assert out.iters_used == 5

    def test_converged_implies_zero_syndrome(self, code1000):
        rng = np.random.default_rng(18)
        for trial in range(5):
            cw = code1000.encode(rng.integers(0, 2, code1000.k).astype(np.uint8))
            llr = np.where(cw == 0, 3.0, -3.0) + rng.normal(0, 2.0, code1000.n)
            out = code1000.decode_bp(llr, max_iters=30)
            if out.converged:
                assert not code1000.syndrome(out.bits).any()

    def test_channel_symmetry(self, code1000, rng):
        # sign-flipping the LLRs on the support of any codeword z shifts the
        # decode by exactly z (with degree-9 checks present the all-ones
        # word is not in the code, so z must be a codeword, not all-ones)
        cw = code1000.encode(rng.integers(0, 2, code1000.k).astype(np.uint8))
        z = code1000.encode(rng.integers(0, 2, code1000.k).astype(np.uint8))
        llr = np.where(cw == 0, 1.0, -1.0) * rng.uniform(0.5, 4.0, code1000.n)
        flips = rng.choice(code1000.n, size=30, replace=False)
        llr[flips] *= -1.0
        out = code1000.decode_bp(llr, max_iters=15)
        mirrored = code1000.decode_bp(llr * np.where(z == 0, 1.0, -1.0), 15)
        assert mirrored.converged == out.converged
        assert np.array_equal(mirrored.bits, out.bits ^ z)
        assert mirrored.iters_used == out.iters_used

    def test_messages_stay_finite_under_stress(self, code1000, rng):
        # saturated, adversarially mixed inputs must never produce NaN/inf
        llr = rng.choice([-L_MAX, L_MAX, 0.0, 1e-9, -1e-9], size=code1000.n)
        out = code1000.decode_bp(llr, max_iters=10)
        assert out.bits.shape == (code1000.n,)

    def test_rejects_nonfinite_llrs(self, code1000):
        llr = np.zeros(code1000.n)
        llr[0] = np.inf
        with pytest.raises(InvalidParameterError):
            code1000.decode_bp(llr, max_iters=5)


class TestAlist:
    def test_round_trip_preserves_matrix_and_encoder(self, code1000, tmp_path, rng):
        path = tmp_path / "code.alist"
        code1000.to_alist(path)
        clone = from_alist(path)
        assert (clone.n, clone.m) == (code1000.n, code1000.m)
        # our files carry an invertible tail block, so the clone keeps the
        # column order and reproduces the exact encoder
        assert all(
            np.array_equal(a, b)
            for a, b in zip(clone.check_neighbors, code1000.check_neighbors)
        )
        u = rng.integers(0, 2, code1000.k).astype(np.uint8)
        assert np.array_equal(clone.encode(u), code1000.encode(u))
