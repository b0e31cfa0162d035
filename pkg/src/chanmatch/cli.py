"""Command-line front end.

Subcommands:

* ``sweep``          Monte Carlo BER over a launch-power grid for one
                     decoding strategy, with survivability analysis.
* ``calibrate``      run the split-step link at several powers and fit
                     the cubic surrogate noise law.
* ``mi-curve``       mutual information of the calibrated surrogate
                     across the power grid (plain-text two-column output).
* ``survivability``  recompute the survivability report from a sweep CSV.

Exit codes: 0 success, 2 configuration error, 3 I/O error.

The JSON config uses unit-suffixed keys; unknown keys are rejected so
typos fail loudly.  Any key may be omitted, in which case the defaults
below apply (paper-scale noise chain, desk-scale split-step setup).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, ssfm
from .errors import ChanMatchError, ConfigError
from .harness import (
    RunConfig,
    emit,
    mi_curve,
    read_records_csv,
    run_point,
    survivability,
    sweep,
)
from .ldpc import construct_code
from .surrogate import NlinParams, calibrate_kappa
from .units import dbm_to_watt

CONFIG_DEFAULTS = {
    # surrogate + decoding experiment
    "n_ldpc": 4000,
    "ldpc_seed": 1,
    "target_rate": 0.63,
    "p_opt_dbm": -6.8,
    "p_min_dbm": -12.0,
    "p_max_dbm": -3.0,
    "p_step_db": 0.25,
    "epsilon": 0.0,
    "estimate_structure": "scalar",
    "nu_min": 1e-6,
    "sigma2_ase_w": None,   # None: n_spans * ase_psd * symbol_rate chain
    "kappa_per_w2": None,   # None: calibrated so the SNR peaks at p_opt_dbm
    "mi_samples": 100_000,
    "mi_seed": 0,
    # split-step link (desk-scale defaults; full scale: 90/3600/5)
    "n_spans": 10,
    "n_symbols": 1024,
    "n_channels": 3,
    "samples_per_symbol": 16,
    "ssfm_rel_error": 1e-5,
    "ase_on": True,
    "calib_powers_dbm": [-9.0, -6.5, -4.0, -1.5],
    "calib_seed": 0,
    # the ASE variance chain is anchored at the paper-scale span count
    "sigma2_chain_n_spans": 90,
}


def load_config(path) -> dict:
    """Read a JSON config, apply defaults, reject unknown keys."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(CONFIG_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return {**CONFIG_DEFAULTS, **data}


def fiber_from_config(cfg: dict) -> ssfm.FiberSystemParams:
    return ssfm.FiberSystemParams(
        n_spans=int(cfg["n_spans"]),
        n_symbols=int(cfg["n_symbols"]),
        n_channels=int(cfg["n_channels"]),
        samples_per_symbol=int(cfg["samples_per_symbol"]),
    )


def nlin_from_config(cfg: dict) -> NlinParams:
    """Noise-law parameters: explicit values win, otherwise the ASE chain."""
    sigma2 = cfg["sigma2_ase_w"]
    if sigma2 is None:
        full = ssfm.FiberSystemParams()
        sigma2 = (
            cfg["sigma2_chain_n_spans"]
            * ssfm.ase_psd(full)
            * full.symbol_rate_baud
        )
    kappa = cfg["kappa_per_w2"]
    if kappa is None:
        kappa = calibrate_kappa(sigma2, float(dbm_to_watt(cfg["p_opt_dbm"])))
    return NlinParams(float(sigma2), float(kappa), float(cfg["epsilon"]))


def power_grid(cfg: dict) -> list[float]:
    lo, hi, step = cfg["p_min_dbm"], cfg["p_max_dbm"], cfg["p_step_db"]
    if step <= 0 or hi < lo:
        raise ConfigError("bad power grid bounds/step")
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    params = nlin_from_config(cfg)
    code = construct_code(int(cfg["n_ldpc"]), float(cfg["target_rate"]),
                          int(cfg["ldpc_seed"]))
    run_cfg = RunConfig(
        code=code,
        params=params,
        strategy=args.strategy,
        r1=args.r1,
        r2=args.r2,
        p_opt_dbm=float(cfg["p_opt_dbm"]),
        estimate_structure=cfg["estimate_structure"],
        nu_min=float(cfg["nu_min"]),
    )
    grid = power_grid(cfg)
    workers = args.workers or os.cpu_count() or 1
    records = sweep(grid, run_cfg, args.blocks, args.seed, n_workers=workers)
    report = survivability(records, args.target)
    echo = {**cfg, "strategy": args.strategy, "r1": args.r1, "r2": args.r2,
            "blocks": args.blocks, "seed": args.seed, "target_ber": args.target}
    csv_path, json_path = emit(records, report, args.out, echo)
    curve_path = os.path.join(args.out, "ber_curve.txt")
    with open(curve_path, "w") as fh:
        for r in records:
            fh.write(f"{r.power_dbm!r} {r.ber!r}\n")
    print(f"wrote {csv_path}, {json_path}, {curve_path}")
    if report.found:
        print(
            f"survivability: [{report.p_lo_dbm:.2f}, {report.p_hi_dbm:.2f}] dBm,"
            f" width {report.width_db:.2f} dB at BER <= {report.target_ber:g}"
        )
    else:
        print(f"no power meets BER <= {report.target_ber:g}")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    fiber = fiber_from_config(cfg)
    sc = ssfm.StepControl(target_rel_error=float(cfg["ssfm_rel_error"]))
    from .constellation import build_16qam

    const = build_16qam()
    txs, rxs, pws = [], [], []
    for i, p_dbm in enumerate(cfg["calib_powers_dbm"]):
        rng = np.random.default_rng([int(cfg["calib_seed"]), i])
        p_w = float(dbm_to_watt(p_dbm))
        tx, rx = ssfm.simulate_link(
            fiber, p_w, rng, const, add_noise=bool(cfg["ase_on"]), step_control=sc
        )
        txs.append(tx)
        rxs.append(rx)
        pws.append(p_w)
        print(f"  {p_dbm:+.2f} dBm: residual variance {np.mean(np.abs(rx-tx)**2):.4e}")
    fit = ssfm.fit_surrogate(txs, rxs, pws)
    doc = {
        "version": __version__,
        "sigma2_ase_w": fit.params.sigma2_ase,
        "kappa_per_w2": fit.params.kappa,
        "kappa_raw_per_w2": fit.kappa_raw,
        "fit_residual_rms_w": fit.residual_rms,
        "powers_w": list(fit.powers_w),
        "nu_hat": list(fit.nu_hat),
    }
    try:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise OSError(f"cannot write {args.out}: {e}") from e
    print(f"wrote {args.out}")
    return 0


def _cmd_mi_curve(args) -> int:
    cfg = load_config(args.config)
    params = nlin_from_config(cfg)
    grid = power_grid(cfg)
    points = mi_curve(params, grid, int(cfg["mi_samples"]), int(cfg["mi_seed"]))
    try:
        with open(args.out, "w") as fh:
            for p_dbm, est in points:
                fh.write(f"{p_dbm!r} {est.bits!r}\n")
    except OSError as e:
        raise OSError(f"cannot write {args.out}: {e}") from e
    best = max(points, key=lambda t: t[1].bits)
    print(f"wrote {args.out}; argmax {best[0]:+.2f} dBm at {best[1].bits:.4f} bits"
          f" (+-{best[1].std_err:.4f})")
    return 0


def _cmd_survivability(args) -> int:
    records = read_records_csv(args.infile)
    report = survivability(records, args.target)
    print(json.dumps(report.__dict__, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanmatch",
        description="Decoding survivability experiments under launch-power "
        "fluctuations on a conditionally Gaussian WDM surrogate",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo BER over the power grid")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", required=True, choices=["fixed", "genie", "matched"])
    p.add_argument("--r1", type=int, required=True)
    p.add_argument("--r2", type=int, required=True)
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=0, help="0 = all cores")
    p.add_argument("--target", type=float, default=1e-3)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="fit the surrogate law from SSFM runs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("mi-curve", help="surrogate mutual information vs power")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mi_curve)

    p = sub.add_parser("survivability", help="recompute the report from a CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target", type=float, default=1e-3)
    p.set_defaults(func=_cmd_survivability)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ChanMatchError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
