"""Command-line entry point; each subcommand writes CSV files plus ``manifest.json``."""

import argparse
import csv
import os
import sys

import numpy as np

from . import harness as hz
from .allocation import AllocationModel, allocate, write_allocation_csv
from .channel import draw_pathloss, lmmse_variances
from .metrics import band_powers, sc_ofdm_equivalence_check, write_decomposition_csv
from .waveform import par_ccdf
from ._random import rng_for

CCDF_THRESHOLDS_DB = np.round(np.arange(0.0, 12.0001, 0.1), 10)


def _setup(args):
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg, sweep = hz.load_config(args.config, overrides)
    os.makedirs(args.out, exist_ok=True)
    return cfg, sweep


def cmd_par_ccdf(args):
    cfg, sweep = _setup(args)
    ccdf = {}
    for scheme in sweep.schemes:
        sig = hz.par_ensemble(cfg, scheme, blocks=sweep.ccdf_blocks, seed=sweep.seed,
                              transmission=sweep.transmission)
        ccdf[scheme] = (CCDF_THRESHOLDS_DB, par_ccdf(sig, CCDF_THRESHOLDS_DB))
    return cfg, sweep, hz.emit_figures(args.out, {"ccdf": ccdf})


def cmd_psd(args):
    cfg, sweep = _setup(args)
    spectra = {}
    for scheme in sweep.schemes:
        for bo in (sweep.backoffs_db[0], sweep.backoffs_db[-1]):
            p = hz.run_operating_point(cfg, scheme, bo, trials=sweep.trials, seed=sweep.seed,
                                       sweep=sweep, keep_spectra=True, strict=False)
            _, p_in, _ = band_powers(p.psd_f, p.psd, cfg.B)
            spectra[f"{scheme}_bo{bo:g}"] = (p.psd_f / cfg.B, 10 * np.log10(p.psd / p_in))
    return cfg, sweep, hz.emit_figures(args.out, {"psd": spectra})


def cmd_distortion_sweep(args):
    cfg, sweep = _setup(args)
    points = []
    for scheme in sweep.schemes:
        points.extend(hz.run_backoff_sweep(cfg, scheme, sweep=sweep, strict=False))
    files = hz.emit_figures(args.out, {"distortion": points})
    path = os.path.join(args.out, "decomposition.csv")
    write_decomposition_csv(path, [(p.scheme, p.backoff_db, p.decomposition) for p in points])
    return cfg, sweep, files + [path]


def cmd_rate_power(args):
    cfg, sweep = _setup(args)
    res = hz.rate_power_sweep(cfg, sweep, progress=_progress if args.verbose else None)
    return cfg, sweep, hz.emit_figures(args.out, {"rate_power": res})


EFF_RATE_COLUMNS = ("scheme", "P_cons", "theta", "backoff", "eta", "aclr", "sum_rate", "sum_rate_se")


def cmd_eff_rate(args):
    cfg, sweep = _setup(args)
    res = hz.rate_power_sweep(cfg, sweep.with_(aclr_max_db=None),
                              progress=_progress if args.verbose else None)
    path = os.path.join(args.out, "eff_rate.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EFF_RATE_COLUMNS)
        for scheme, pc, theta, p, r, se in res.table:
            w.writerow([scheme, repr(pc), "" if theta is None else repr(float(theta)),
                        repr(float(p.backoff_db)), repr(p.eta), repr(p.aclr_db), repr(r), repr(se)])
    return cfg, sweep, [path]


def cmd_sc_ofdm_check(args):
    cfg, sweep = _setup(args)
    ref = hz.reference_config(cfg)
    path = os.path.join(args.out, "sc_ofdm.csv")
    ok = True
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "user", "quantity", "sc", "sc_se", "ofdm", "ofdm_se", "agree"])
        for scheme in [s for s in sweep.schemes if s != "DTCE"]:
            rep = sc_ofdm_equivalence_check(ref, scheme, sweep.trials, sweep.seed,
                                            hz.nominal_theta(ref, scheme))
            ok &= rep["passed"]
            for q, st in rep["stats"].items():
                for k in range(ref.K):
                    w.writerow([scheme, k, q, repr(float(st["sc"][k])), repr(float(st["sc_se"][k])),
                                repr(float(st["ofdm"][k])), repr(float(st["ofdm_se"][k])),
                                int(st["ok"][k])])
    taps = {f"M{m}": hz.zf_tap_energy(cfg.with_(M=m), seed=sweep.seed) for m in (cfg.K + 1, cfg.M)}
    files = hz.emit_figures(args.out, {"taps": taps})
    if not ok:
        print("single-carrier and OFDM statistics disagree beyond 3 standard errors", file=sys.stderr)
    return cfg, sweep, [path] + files


def cmd_allocate(args):
    cfg, sweep = _setup(args)
    scheme = sweep.schemes[0]
    point = hz.run_operating_point(cfg, scheme, sweep.backoffs_db[0], trials=sweep.trials,
                                   seed=sweep.seed, sweep=sweep, strict=False)
    dec = point.decomposition
    beta = draw_pathloss(cfg.with_(fixed_beta=None), rng_for(sweep.seed, "drop", 0))
    delta, err = lmmse_variances(cfg, beta)
    P = point.eta * float(hz.p_cons_from_db(cfg, sweep.p_cons_db[0]))
    model = AllocationModel(
        beta=beta, delta=delta, g=np.mean(np.abs(dec.g)), c=hz._mean_c(dec), rho=np.mean(dec.rho),
        I=np.mean(dec.I / dec.delta) * delta, E=err, Dprime=float(np.mean(dec.D)), P=P,
        N0_over_T=cfg.noise_density_ratio,
    )
    xi = allocate(model)
    path = os.path.join(args.out, "allocation.csv")
    write_allocation_csv(path, model, xi)
    return cfg, sweep, [path]


def _progress(scheme, theta):
    print(f"{scheme} theta={theta}", file=sys.stderr)


COMMANDS = {
    "par-ccdf": (cmd_par_ccdf, "amplitude CCDF of the pre-amplifier antenna signals"),
    "psd": (cmd_psd, "spectra after amplification at the extreme backoffs"),
    "distortion-sweep": (cmd_distortion_sweep, "efficiency, ACLR, clipping and distortion versus backoff"),
    "rate-power": (cmd_rate_power, "sum rate versus consumed power under the ACLR limit"),
    "eff-rate": (cmd_eff_rate, "sum rate for every efficiency and parameter without ACLR limit"),
    "sc-ofdm-check": (cmd_sc_ofdm_check, "single-carrier versus OFDM gain and interference; ZF tap energy"),
    "allocate": (cmd_allocate, "max-min power allocation for one user drop"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mimopa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI file with [simulation] and [sweep] sections")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise SystemExit("--seed must be an unsigned 64-bit integer")
    func = COMMANDS[args.command][0]
    cfg, sweep, files = func(args)
    hz.write_manifest(args.out, cfg, sweep, args.command, [os.path.basename(f) for f in files])
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
