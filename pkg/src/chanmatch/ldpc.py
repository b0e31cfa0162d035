"""Rate-0.63 binary LDPC code: PEG construction, encoding, BP decoding.

The parity-check matrix is built by progressive edge growth with regular
column weight 3; check degrees settle on the two values floor/ceil of
3n/m (about 8.1 on average at rate 0.63).  Columns are permuted after
construction so that the last m positions form an invertible submatrix,
which makes encoding systematic: codeword = [info bits, parity bits].

LLR convention throughout: LLR = log(Pr[bit = 0] / Pr[bit = 1]), so a
positive value favors 0.  Messages are saturated at +-L_MAX.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, InvalidParameterError

#: Saturation bound for channel LLRs and internal messages.
L_MAX = 30.0

_PEG_RETRIES = 5
_POPCNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class DecodeOutput:
    """Hard decisions plus decoder bookkeeping."""

    bits: np.ndarray
    converged: bool
    iters_used: int


class LdpcCode:
    """Binary LDPC code with a fixed parity-check matrix.

    Instances are immutable after construction and safe to share across
    concurrent decodes; :meth:`decode_bp` allocates its own message
    memory per call.
    """

    def __init__(self, check_neighbors: list[np.ndarray], n: int, seed: int | None):
        self.n = n
        self.m = len(check_neighbors)
        self.k = n - self.m
        self.seed = seed
        self._set_adjacency(check_neighbors)
        self._parity_map = None  # packed (m, ceil(k/8)) uint8, set by _finalize

    def _set_adjacency(self, check_neighbors: list[np.ndarray]) -> None:
        self.check_neighbors = [
            np.sort(np.asarray(c, dtype=np.int32)) for c in check_neighbors
        ]
        self.row_degrees = np.array([len(c) for c in self.check_neighbors])
        self.col_degrees = np.bincount(
            np.concatenate(self.check_neighbors), minlength=self.n
        )
        # flat edge arrays for vectorized message passing
        self.edge_check = np.repeat(
            np.arange(self.m, dtype=np.int32), self.row_degrees
        )
        self.edge_var = np.concatenate(self.check_neighbors)

    @property
    def rate(self) -> float:
        return self.k / self.n

    # -- construction -------------------------------------------------

    def _finalize(self) -> bool:
        """Derive the systematic encoder; False if H is rank-deficient.

        Pivots are searched in the last m columns first, so a matrix whose
        tail block is already invertible (e.g. one of our own alist files)
        keeps its column order; otherwise columns are permuted so the
        parity positions come last.
        """
        n, m = self.n, self.m
        scan = np.concatenate([np.arange(n - m, n), np.arange(0, n - m)])
        scan_of = np.empty(n, dtype=np.int64)
        scan_of[scan] = np.arange(n)
        rows = _pack_rows([scan_of[c] for c in self.check_neighbors], n)
        pivots_scan = _gf2_rref(rows, n)
        if len(pivots_scan) < m:
            return False
        dense = np.unpackbits(rows, axis=1, bitorder="little")[:, :n]
        info_scan = np.setdiff1d(np.arange(n), pivots_scan)
        # RREF row i reads x[pivot_i] = sum over its info-column bits
        orig_info = scan[info_scan]
        order = np.argsort(orig_info)
        self._parity_map = np.packbits(
            dense[:, info_scan][:, order], axis=1, bitorder="little"
        )
        orig_parity = scan[pivots_scan]
        perm = np.concatenate([orig_info[order], orig_parity])
        if not np.array_equal(perm, np.arange(n)):
            inv = np.empty(n, dtype=np.int32)
            inv[perm] = np.arange(n, dtype=np.int32)
            self._set_adjacency([inv[c] for c in self.check_neighbors])
        return True

    # -- encoding ------------------------------------------------------

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """Systematic encoding: returns [info_bits, parity] of length n."""
        info_bits = np.asarray(info_bits, dtype=np.uint8)
        if info_bits.shape != (self.k,):
            raise InvalidParameterError(f"expected {self.k} info bits")
        packed = np.packbits(info_bits, bitorder="little")
        acc = _POPCNT[self._parity_map & packed].sum(axis=1, dtype=np.int64)
        parity = (acc & 1).astype(np.uint8)
        return np.concatenate([info_bits, parity])

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """H c over GF(2), one value per check."""
        bits = np.asarray(bits, dtype=np.int64)
        s = np.bincount(self.edge_check, weights=bits[self.edge_var], minlength=self.m)
        return (s.astype(np.int64) & 1).astype(np.uint8)

    # -- decoding ------------------------------------------------------

    def decode_bp(self, llr: np.ndarray, max_iters: int) -> DecodeOutput:
        """Flooding-schedule sum-product decoding.

        Stops early once the hard decisions satisfy every check with no
        posterior stuck at exactly zero (an all-zero input therefore runs
        the full budget and reports converged = False).  Non-convergence
        is reported through the flag, never as an error.
        """
        if max_iters < 1:
            raise InvalidParameterError("max_iters must be at least 1")
        llr = np.asarray(llr, dtype=np.float64)
        if llr.shape != (self.n,):
            raise InvalidParameterError(f"expected {self.n} LLRs")
        if not np.all(np.isfinite(llr)):
            raise InvalidParameterError("LLRs must be finite")

        ec, ev = self.edge_check, self.edge_var
        chan = np.clip(llr, -L_MAX, L_MAX)
        q = chan[ev]
        hard = (chan < 0).astype(np.uint8)

        for it in range(1, max_iters + 1):
            # check-node update in the sign/log-magnitude domain
            neg = q < 0
            f = _phi(np.abs(q))
            f_sum = np.bincount(ec, weights=f, minlength=self.m)
            neg_sum = np.bincount(ec, weights=neg, minlength=self.m)
            r_mag = _phi(f_sum[ec] - f)
            r_sign = 1.0 - 2.0 * ((neg_sum[ec] - neg) % 2)
            r = np.clip(r_sign * r_mag, -L_MAX, L_MAX)

            # variable-node update and posterior
            r_sum = np.bincount(ev, weights=r, minlength=self.n)
            post = chan + r_sum
            q = np.clip(post[ev] - r, -L_MAX, L_MAX)

            hard = (post < 0).astype(np.uint8)
            if not np.any(self.syndrome(hard)) and np.all(post != 0.0):
                return DecodeOutput(hard, True, it)

        return DecodeOutput(hard, False, max_iters)

    # -- interchange ----------------------------------------------------

    def to_alist(self, path) -> None:
        """Write the parity-check matrix in alist text format."""
        var_neighbors = [[] for _ in range(self.n)]
        for i, cols in enumerate(self.check_neighbors):
            for c in cols:
                var_neighbors[c].append(i)
        max_col = max(len(v) for v in var_neighbors)
        max_row = int(self.row_degrees.max())
        lines = [
            f"{self.n} {self.m}",
            f"{max_col} {max_row}",
            " ".join(str(len(v)) for v in var_neighbors),
            " ".join(str(d) for d in self.row_degrees),
        ]
        for v in var_neighbors:
            lines.append(" ".join([str(i + 1) for i in v] + ["0"] * (max_col - len(v))))
        for cols in self.check_neighbors:
            entries = [str(c + 1) for c in cols] + ["0"] * (max_row - len(cols))
            lines.append(" ".join(entries))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def from_alist(path) -> LdpcCode:
    """Read a parity-check matrix in alist format and rebuild the encoder."""
    with open(path) as fh:
        tokens = fh.read().splitlines()
    n, m = map(int, tokens[0].split())
    check_neighbors = []
    for i in range(m):
        row = [int(t) - 1 for t in tokens[4 + n + i].split() if int(t) > 0]
        check_neighbors.append(np.array(row, dtype=np.int32))
    code = LdpcCode(check_neighbors, n, seed=None)
    if not code._finalize():
        raise ConstructionError("alist matrix is not full row rank")
    return code


def construct_code(n: int, target_rate: float = 0.63, seed: int = 0) -> LdpcCode:
    """Build a rate ``target_rate`` PEG code with column weight 3.

    Deterministic for a fixed seed.  Retries with derived seeds if the
    matrix comes out rank-deficient; raises
    :class:`~chanmatch.errors.ConstructionError` if that keeps failing.
    """
    if n < 1000:
        raise InvalidParameterError("block length must be at least 1000")
    m = round(n * (1.0 - target_rate))
    if abs((n - m) / n - target_rate) > 0.005:
        raise InvalidParameterError("block length incompatible with target rate")
    for attempt in range(_PEG_RETRIES):
        rng = np.random.default_rng([seed, attempt])
        check_neighbors = _peg(n, m, 3, rng)
        code = LdpcCode(check_neighbors, n, seed)
        if code._finalize():
            return code
    raise ConstructionError(f"no full-rank PEG matrix after {_PEG_RETRIES} attempts")


# -- internals ----------------------------------------------------------


def _phi(x: np.ndarray) -> np.ndarray:
    """Self-inverse map -log tanh(x/2), clipped away from 0 and infinity."""
    x = np.clip(x, 1e-12, 60.0)
    return -np.log(np.tanh(0.5 * x))


def _peg(n: int, m: int, dv: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Progressive edge growth for a regular-column-weight-``dv`` graph.

    Each new edge goes to a check node as far as possible (graph
    distance) from the current variable node, preferring checks below
    the ceil(dv*n/m) degree cap and low degree; remaining ties are
    broken randomly with the supplied generator.  BFS uses sentinel
    padding (index n for variables, m for checks) so every expansion is
    a flat numpy gather.
    """
    cap = -(-dv * n // m)
    chk_deg = np.zeros(m, dtype=np.int32)
    var_deg = np.zeros(n, dtype=np.int32)
    chk_nb = np.full((m, cap + 2), n, dtype=np.int32)   # -> variable ids
    var_nb = np.full((n, dv), m, dtype=np.int32)        # -> check ids

    seen_var = np.zeros(n + 1, dtype=bool)
    reached = np.zeros(m + 1, dtype=bool)

    def pick(cands: np.ndarray) -> int:
        below = cands[chk_deg[cands] < cap]
        pool = below if below.size else cands
        pool = pool[chk_deg[pool] == chk_deg[pool].min()]
        return int(pool[rng.integers(pool.size)]) if pool.size > 1 else int(pool[0])

    all_checks = np.arange(m)
    for v in range(n):
        for t in range(dv):
            if t == 0:
                c = pick(all_checks)
            else:
                reached[:] = False
                reached[m] = True
                seen_var[:] = False
                seen_var[[v, n]] = True
                new_chk = np.unique(var_nb[v, :t])
                last_new = new_chk
                while new_chk.size:
                    reached[new_chk] = True
                    last_new = new_chk
                    vs = np.unique(chk_nb[new_chk].ravel())
                    vs = vs[~seen_var[vs]]
                    if vs.size == 0:
                        break
                    seen_var[vs] = True
                    cs = np.unique(var_nb[vs].ravel())
                    new_chk = cs[~reached[cs]]
                unreached = np.flatnonzero(~reached[:m])
                c = pick(unreached if unreached.size else last_new)
            chk_nb[c, chk_deg[c]] = v
            chk_deg[c] += 1
            var_nb[v, t] = c
            var_deg[v] += 1

    return [chk_nb[c, : chk_deg[c]].copy() for c in range(m)]


def _pack_rows(check_neighbors: list[np.ndarray], n: int) -> np.ndarray:
    """Rows of H packed little-endian into uint8 bytes."""
    rows = np.zeros((len(check_neighbors), (n + 7) // 8), dtype=np.uint8)
    for i, cols in enumerate(check_neighbors):
        for c in cols:
            rows[i, c >> 3] |= np.uint8(1 << (c & 7))
    return rows


def _gf2_rref(rows: np.ndarray, n: int) -> np.ndarray:
    """In-place reduced row echelon form over GF(2); returns pivot columns."""
    m = rows.shape[0]
    pivots = []
    r = 0
    for col in range(n):
        if r == m:
            break
        byte, bit = col >> 3, np.uint8(1 << (col & 7))
        hot = np.flatnonzero(rows[r:, byte] & bit) + r
        if hot.size == 0:
            continue
        p = hot[0]
        if p != r:
            rows[[r, p]] = rows[[p, r]]
        others = np.flatnonzero(rows[:, byte] & bit)
        others = others[others != r]
        if others.size:
            rows[others] ^= rows[r]
        pivots.append(col)
        r += 1
    return np.array(pivots, dtype=np.int64)
