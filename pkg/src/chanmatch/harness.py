"""Experiment driver: power sweeps, Monte Carlo BER, survivability, output.

Every data point is a Monte Carlo average over independently decoded
blocks.  Randomness is derived from (master seed, point index, block
index), so results are bit-identical however the work is distributed
across processes.  The survivability of a BER-vs-power curve is the
width of the widest contiguous power interval that stays at or below
the target BER, with crossings interpolated linearly in
(dBm, log10 BER).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .constellation import Constellation, build_16qam
from .errors import InvalidParameterError
from .ldpc import LdpcCode
from .matching import NU_MIN_DEFAULT, DecoderConfig, make_nominal, turbo_decode
from .mlc import mlc_encode
from .surrogate import ChannelState, MiEstimate, NlinParams, mi_uniform, transmit
from .units import dbm_to_watt


@dataclass(frozen=True)
class RunConfig:
    """Everything a BER point needs besides its power and seed."""

    code: LdpcCode
    params: NlinParams
    strategy: str
    r1: int
    r2: int
    p_opt_dbm: float
    estimate_structure: str = "scalar"
    nu_min: float = NU_MIN_DEFAULT
    constellation: Constellation = field(default_factory=build_16qam)

    def decoder_config(self) -> DecoderConfig:
        nominal = make_nominal(
            self.params,
            dbm_to_watt(self.p_opt_dbm),
            self.estimate_structure,
            self.constellation,
            self.nu_min,
        )
        return DecoderConfig(
            strategy=self.strategy,
            r1=self.r1,
            r2=self.r2,
            nominal_estimate=nominal,
            estimate_structure=self.estimate_structure,
            nu_min=self.nu_min,
        )

    @property
    def bits_per_block(self) -> int:
        return self.code.k + 3 * self.code.n


@dataclass(frozen=True)
class BerRecord:
    """Monte Carlo tally of one (power, strategy) point."""

    power_dbm: float
    strategy: str
    r1: int
    r2: int
    blocks: int
    bits: int
    errors: int
    ber: float
    mean_passes: float
    mean_bp_iters: float
    seed: str


@dataclass(frozen=True)
class SurvivabilityReport:
    """Widest contiguous power interval meeting the BER target."""

    target_ber: float
    p_lo_dbm: float
    p_hi_dbm: float
    width_db: float
    found: bool
    lo_interpolated: bool
    hi_interpolated: bool
    used_zero_error_floor: bool


def _seed_tuple(seed) -> tuple[int, ...]:
    return (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)


def _block_rng(seed, point_index: int, block: int) -> np.random.Generator:
    return np.random.default_rng([*_seed_tuple(seed), point_index, block])


def _decode_blocks(cfg, p_dbm, seed, point_index, blocks):
    """Tally errors/passes/iterations over a set of block indices."""
    p_w = float(dbm_to_watt(p_dbm))
    const = cfg.constellation
    dec_cfg = cfg.decoder_config()
    genie = None
    if cfg.strategy == "genie":
        genie = make_nominal(
            cfg.params, p_w, cfg.estimate_structure, const, cfg.nu_min
        )
    state = ChannelState(p_w, cfg.code.n)
    errors = passes = iters = 0
    for b in blocks:
        rng = _block_rng(seed, point_index, b)
        info = rng.integers(0, 2, size=cfg.bits_per_block).astype(np.uint8)
        frame = mlc_encode(info, cfg.code, const)
        y = transmit(frame.symbols, state, cfg.params, rng)
        res = turbo_decode(y, dec_cfg, cfg.code, const, genie)
        errors += int(np.sum(res.info_bits != info))
        passes += res.passes_used
        iters += res.bp_iters_used
    return errors, passes, iters


def run_point(
    p_dbm: float,
    cfg: RunConfig,
    n_blocks: int,
    seed,
    n_workers: int = 1,
    point_index: int = 0,
) -> BerRecord:
    """Monte Carlo BER at one launch power.

    The tally is a pure function of (p_dbm, cfg, seed, point_index);
    ``n_workers`` only distributes blocks across processes.
    """
    if n_blocks < 1:
        raise InvalidParameterError("n_blocks must be at least 1")
    if n_workers > 1 and n_blocks > 1:
        chunks = np.array_split(np.arange(n_blocks), min(n_workers, n_blocks))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(
                pool.map(
                    _decode_blocks_star,
                    [(cfg, p_dbm, seed, point_index, c) for c in chunks],
                )
            )
        errors = sum(p[0] for p in parts)
        passes = sum(p[1] for p in parts)
        iters = sum(p[2] for p in parts)
    else:
        errors, passes, iters = _decode_blocks(
            cfg, p_dbm, seed, point_index, range(n_blocks)
        )
    bits = n_blocks * cfg.bits_per_block
    return BerRecord(
        power_dbm=float(p_dbm),
        strategy=cfg.strategy,
        r1=cfg.r1,
        r2=cfg.r2,
        blocks=n_blocks,
        bits=bits,
        errors=errors,
        ber=errors / bits,
        mean_passes=passes / n_blocks,
        mean_bp_iters=iters / n_blocks,
        seed="-".join(map(str, _seed_tuple(seed))),
    )


def _decode_blocks_star(args):
    return _decode_blocks(*args)


def _point_star(args):
    p_dbm, cfg, n_blocks, seed, i = args
    return run_point(p_dbm, cfg, n_blocks, seed, n_workers=1, point_index=i)


def sweep(
    p_grid_dbm,
    cfg: RunConfig,
    n_blocks: int,
    seed,
    n_workers: int = 1,
) -> list[BerRecord]:
    """One :func:`run_point` per grid power, ascending grid required."""
    grid = [float(p) for p in p_grid_dbm]
    if grid != sorted(grid):
        raise InvalidParameterError("power grid must be sorted ascending")
    tasks = [(p, cfg, n_blocks, seed, i) for i, p in enumerate(grid)]
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(_point_star, tasks))
    return [_point_star(t) for t in tasks]


def survivability(
    records: list[BerRecord], target: float = 1e-3
) -> SurvivabilityReport:
    """Widest contiguous power interval with BER <= target.

    Crossings between grid points are interpolated linearly in
    (dBm, log10 BER).  Zero-error records enter the interpolation at the
    resolution floor 1 / (2 * bits) but count as meeting the target.
    """
    if len(records) < 2:
        raise InvalidParameterError("need at least 2 records")
    p = np.array([r.power_dbm for r in records])
    if np.any(np.diff(p) <= 0):
        raise InvalidParameterError("records must be sorted by ascending power")
    used_floor = any(r.errors == 0 for r in records)
    ber_interp = np.array(
        [r.ber if r.errors > 0 else 1.0 / (2.0 * r.bits) for r in records]
    )
    below = np.array([r.ber <= target for r in records])

    if not below.any():
        return SurvivabilityReport(target, math.nan, math.nan, 0.0, False,
                                   False, False, used_floor)

    # widest contiguous run of points meeting the target
    runs = []
    i = 0
    while i < len(below):
        if below[i]:
            j = i
            while j + 1 < len(below) and below[j + 1]:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    log_b = np.log10(ber_interp)
    log_t = math.log10(target)

    def cross(i_above, i_below):
        """Power where the log-BER segment crosses the target."""
        y0, y1 = log_b[i_above], log_b[i_below]
        if y0 <= log_t or y0 == y1:
            return p[i_below]
        t = (y0 - log_t) / (y0 - y1)
        return p[i_above] + t * (p[i_below] - p[i_above])

    best = None
    for i, j in runs:
        lo = cross(i - 1, i) if i > 0 else p[0]
        hi = cross(j + 1, j) if j < len(below) - 1 else p[-1]
        if best is None or hi - lo > best[1] - best[0]:
            best = (lo, hi, i > 0, j < len(below) - 1)
    lo, hi, lo_int, hi_int = best
    return SurvivabilityReport(
        target, float(lo), float(hi), float(hi - lo), True, lo_int, hi_int,
        used_floor,
    )


CSV_HEADER = "power_dbm,strategy,r1,r2,blocks,bits,errors,ber,mean_passes,seed"


def emit(
    records: list[BerRecord],
    report: SurvivabilityReport | None,
    out_dir,
    config_echo: dict | None = None,
) -> tuple[str, str]:
    """Write records as CSV and the summary as JSON; byte-stable outputs.

    Returns the two file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "ber_records.csv")
    json_path = os.path.join(out_dir, "summary.json")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.power_dbm!r},{r.strategy},{r.r1},{r.r2},{r.blocks},"
            f"{r.bits},{r.errors},{r.ber!r},{r.mean_passes!r},{r.seed}"
        )
    summary = {
        "version": __version__,
        "config": config_echo or {},
        "survivability": asdict(report) if report is not None else None,
    }
    try:
        with open(csv_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise OSError(f"cannot write results under {out_dir}: {e}") from e
    return csv_path, json_path


def read_records_csv(path) -> list[BerRecord]:
    """Parse a CSV produced by :func:`emit`."""
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise InvalidParameterError(f"unexpected CSV header in {path}")
        for line in fh:
            if not line.strip():
                continue
            f = line.strip().split(",")
            records.append(
                BerRecord(
                    power_dbm=float(f[0]), strategy=f[1], r1=int(f[2]),
                    r2=int(f[3]), blocks=int(f[4]), bits=int(f[5]),
                    errors=int(f[6]), ber=float(f[7]),
                    mean_passes=float(f[8]), mean_bp_iters=math.nan,
                    seed=f[9],
                )
            )
    return records


def mi_curve(
    params: NlinParams,
    p_grid_dbm,
    n_samples: int,
    seed,
    constellation: Constellation | None = None,
) -> list[tuple[float, MiEstimate]]:
    """Mutual information of the surrogate across a power grid."""
    const = constellation or build_16qam()
    out = []
    for i, p_dbm in enumerate(p_grid_dbm):
        rng = _block_rng(seed, i, 0)
        est = mi_uniform(params, float(dbm_to_watt(p_dbm)), n_samples, rng, const)
        out.append((float(p_dbm), est))
    return out
