"""Monte Carlo orchestration: operating points, backoff sweeps and rate optimisation.

An operating point is one ``(scheme, theta, backoff)`` combination.  It is
measured at a reference condition where every user has the same path loss
and ``xi_k = 1/K``: the chain is run end to end through the amplifier and
the matched filter, and the results are the amplifier efficiency, the ACLR
and the distortion decomposition.  Rates for random user drops are then
assembled from those constants.

Trials are independent.  Every per-trial statistic is stored under its trial
id and totals are summed in id order, so shards merge to exactly the numbers
a single run produces.
"""

import configparser
import csv
import hashlib
import json
import os
import subprocess
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ._random import rng_for
from .allocation import AllocationModel, allocate, achieved_sinr
from .amplifier import RappAmplifier, amplify, calibrate_lambda0, rapp_gain
from .chain import calibrate_alpha, distortion_stream, simulate_block
from .channel import SimulationConfig, draw_pathloss, lmmse_variances
from .metrics import GramAccumulator, band_powers, psd, welch_nperseg
from .precoder import PrecoderSpec, zf_tap_profile
from .waveform import write_ccdf_csv

__all__ = [
    "SweepConfig",
    "OperatingPoint",
    "OperatingPointAccumulator",
    "SweepResult",
    "MIN_TRIALS",
    "reference_config",
    "make_spec",
    "nominal_theta",
    "theta_grid",
    "calibrate_lambda",
    "accumulate_operating_points",
    "run_operating_point",
    "run_backoff_sweep",
    "eta_max",
    "drop_rates",
    "rate_for_point",
    "optimize_rate",
    "rate_power_sweep",
    "par_ensemble",
    "zf_tap_energy",
    "load_config",
    "write_manifest",
    "emit_figures",
]

MIN_TRIALS = 30


@dataclass(frozen=True)
class SweepConfig:
    """Sweep parameters.

    ``p_cons_db`` is the consumed-power grid in dB relative to
    ``N0/(T beta_min)``, the power at which a cell-edge user would see 0 dB
    SNR.  ``aclr_max_db = None`` disables the out-of-band constraint.  Empty
    theta grids are filled with :func:`theta_grid`.
    """

    schemes: tuple = ("MR", "ZF", "RZF", "DTCE")
    backoffs_db: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)
    theta_points: int = 25
    rzf_rho_grid: tuple = ()
    dtce_gamma_grid: tuple = ()
    p_cons_db: tuple = (-10.0, 0.0, 10.0, 20.0, 30.0, 40.0)
    aclr_max_db: float | None = -45.0
    trials: int = 200
    drops: int = 100
    seed: int = 0
    transmission: str = "sc"
    amp_p: float = 2.0
    lambda_cal_blocks: int = 16
    psd_tiles: int = 4
    psd_resolution: float | None = None
    ccdf_blocks: int = 40

    def __post_init__(self):
        if not self.schemes or not self.backoffs_db or not self.p_cons_db:
            raise ValueError("scheme, backoff and consumed-power grids must be nonempty")
        if self.theta_points < 1:
            raise ValueError("theta_points must be >= 1")
        if self.aclr_max_db is not None and self.aclr_max_db >= 0:
            raise ValueError("aclr_max_db must be negative (or None to disable)")
        if self.trials < MIN_TRIALS:
            raise ValueError(f"at least {MIN_TRIALS} trials per operating point")
        if self.drops < MIN_TRIALS:
            raise ValueError(f"at least {MIN_TRIALS} user drops for averaged rates")

    def with_(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


def reference_config(cfg):
    """Configuration with all users at a common path loss (``beta = 1`` unless fixed)."""
    return cfg if cfg.fixed_beta is not None else cfg.with_(fixed_beta=1.0)


def make_spec(scheme, theta=None, transmission="sc", cfg=None):
    kw = {"scheme": scheme, "transmission": transmission}
    if scheme in ("RZF", "DTCE"):
        if theta is None:
            theta = nominal_theta(cfg, scheme)
        kw["rzf_rho" if scheme == "RZF" else "dtce_gamma"] = float(theta)
    return PrecoderSpec(**kw)


def _beta_ref(cfg):
    if cfg.fixed_beta is not None:
        return cfg.fixed_beta
    d = np.sqrt(0.5 * (cfg.inner_radius**2 + cfg.outer_radius**2))
    return float((cfg.inner_radius / d) ** cfg.alpha)


def nominal_theta(cfg, scheme):
    """Default precoder parameter: ``K N0 T/(P beta)`` for RZF, ``(M-K)/2`` for DTCE."""
    if scheme == "RZF":
        return cfg.K * cfg.noise_density_ratio / (cfg.P * _beta_ref(cfg))
    if scheme == "DTCE":
        return 0.5 * (cfg.M - cfg.K)
    return None


def theta_grid(cfg, scheme, points=25):
    """Log-spaced parameter grid around the scheme's natural scale."""
    if scheme == "RZF":
        scale = cfg.K * cfg.noise_density_ratio / (cfg.P * _beta_ref(cfg))
        return tuple(np.logspace(-3, 3, points) * scale)
    if scheme == "DTCE":
        return tuple(np.logspace(-1, 1, points) * (cfg.M - cfg.K))
    return (None,)


# --------------------------------------------------------------------------
# Operating points


@dataclass
class OperatingPoint:
    """Aggregates for one ``(scheme, theta, backoff)`` with standard errors."""

    scheme: str
    theta: float | None
    backoff_db: float | None
    eta: float
    eta_se: float
    aclr_db: float
    aclr_se_db: float
    decomposition: object
    lambda0: float | None
    n_trials: int
    psd_f: np.ndarray | None = None
    psd: np.ndarray | None = None

    @property
    def clip_power_db(self):
        return self.decomposition.clip_power_db

    @property
    def sigma2(self):
        return self.decomposition.sigma2


class OperatingPointAccumulator:
    """Per-trial efficiency, band-power and Gram statistics for one operating point."""

    def __init__(self, K):
        self.gram = GramAccumulator(K)
        self.eff = {}    # trial -> (sum g^2, sum g, count)
        self.bands = {}  # trial -> (lo, in, hi)
        self.spectra = {}
        self.psd_f = None
        self.delta = None

    def merge(self, other):
        out = OperatingPointAccumulator(self.gram.K)
        out.gram = self.gram.merge(other.gram)
        out.eff = {**self.eff, **other.eff}
        out.bands = {**self.bands, **other.bands}
        out.spectra = {**self.spectra, **other.spectra}
        out.psd_f = self.psd_f if self.psd_f is not None else other.psd_f
        out.delta = self.delta if self.delta is not None else other.delta
        return out

    @property
    def trials(self):
        return self.gram.trials

    def finalize(self, scheme, theta, backoff_db, lambda0, K, strict=True):
        ids = self.trials
        n = len(ids)
        if n < MIN_TRIALS:
            raise ValueError(f"{n} trials; at least {MIN_TRIALS} are needed per aggregate")
        dec = self.gram.finalize(self.delta, np.full(K, 1.0 / K), strict=strict)
        if self.eff:
            e = np.array([self.eff[t] for t in ids])
            eta = np.pi / 4 * e[:, 0].sum() / e[:, 1].sum()
            per = np.pi / 4 * e[:, 0] / e[:, 1]
            eta_se = float(np.std(per, ddof=1) / np.sqrt(n))
        else:
            eta, eta_se = float("nan"), float("nan")
        b = np.array([self.bands[t] for t in ids])
        tot = b.sum(axis=0)
        aclr = max(tot[0], tot[2]) / tot[1]
        per = 10 * np.log10(np.maximum(b[:, 0], b[:, 2]) / b[:, 1])
        aclr_se = float(np.std(per, ddof=1) / np.sqrt(n))
        S = None
        if self.spectra:
            S = np.zeros_like(self.spectra[ids[0]])
            for t in ids:
                S = S + self.spectra[t]
            S = S / n
        return OperatingPoint(
            scheme, theta, backoff_db, float(eta), eta_se, float(10 * np.log10(aclr)), aclr_se,
            dec, lambda0, n, self.psd_f, S,
        )


def _psd_nperseg(cfg, sweep):
    res = cfg.B / 100 if sweep.psd_resolution is None else sweep.psd_resolution
    return welch_nperseg(cfg.kappa / cfg.T, res)


def _trial_bands(cfg, sweep, x_os, keep_spectrum):
    # the block is periodic, so repeating it lengthens the record without edge effects
    nperseg = _psd_nperseg(cfg, sweep)
    tiles = max(sweep.psd_tiles, -(-2 * nperseg // x_os.shape[-1]))
    tiled = np.tile(x_os, (1, tiles))
    f, S = psd(tiled, fs=cfg.kappa / cfg.T, nperseg=nperseg)
    S = S * x_os.shape[0]  # total over antennas
    lo, mid, hi = band_powers(f, S, cfg.B)
    return f, (S if keep_spectrum else None), (float(lo), float(mid), float(hi))


def calibrate_lambda(cfg, spec, amp_template, backoffs, seed, blocks=16, alpha=None):
    """Clipping-loss correction per backoff, from a dedicated calibration ensemble.

    The ensemble is drawn from a seed derived on its own random stream, so the
    trials used for measurement are independent of the calibration.  The
    returned ``lambda0`` is the one that makes the amplified ensemble carry
    the same power as its ideal linear amplification; that is the
    radiated-power constraint up to the ensemble's sampling error.
    """
    cal_seed = int(rng_for(seed, "lambda_cal").integers(2**63))
    if alpha is None and spec.scheme != "DTCE":
        alpha = calibrate_alpha(cfg, spec, seed)
    ens = np.concatenate(
        [simulate_block(cfg, spec, cal_seed, t, alpha=alpha, oversampled=True).u_os for t in range(blocks)],
        axis=-1,
    )
    # target the ensemble's own linear-regime power so that its sampling error in
    # total power cancels and only the clipping loss is corrected
    target = amp_template.P * amp_template.M * float(np.mean(np.abs(ens) ** 2))
    return {bo: calibrate_lambda0(ens, amp_template.with_(backoff_db=bo), P=target) for bo in backoffs}


def accumulate_operating_points(cfg, spec, backoffs, trial_ids, seed, sweep=None, linear=False,
                                lambdas=None, keep_spectra=False):
    """Run ``trial_ids`` once and evaluate every backoff on the same pre-amplifier signals.

    Returns ``{backoff: OperatingPointAccumulator}`` (key ``None`` when
    ``linear``).  ``lambdas`` maps backoff to the calibrated correction.
    """
    sweep = SweepConfig() if sweep is None else sweep
    alpha = None if spec.scheme == "DTCE" else calibrate_alpha(cfg, spec, seed)
    keys = [None] if linear else list(backoffs)
    amps = {}
    if not linear:
        base = RappAmplifier(cfg.M, p=sweep.amp_p, P=cfg.P)
        if lambdas is None:
            lambdas = calibrate_lambda(cfg, spec, base, keys, seed, sweep.lambda_cal_blocks, alpha)
        amps = {bo: base.with_(backoff_db=bo, lambda0=lambdas[bo]) for bo in keys}
    accs = {bo: OperatingPointAccumulator(cfg.K) for bo in keys}
    for t in trial_ids:
        blk = simulate_block(cfg, spec, seed, t, alpha=alpha, oversampled=True)
        for bo in keys:
            acc = accs[bo]
            acc.delta = blk.delta
            if linear:
                x = np.sqrt(cfg.P) * blk.u_os
                d = None
            else:
                amp = amps[bo]
                x = amplify(blk.u_os, amp)
                d = distortion_stream(cfg, blk, amp, spec.transmission)
                gn = rapp_gain(np.abs(blk.u_os) * amp.input_scale / amp.u_max, amp.p)
                acc.eff[t] = (float(np.sum(gn**2)), float(np.sum(gn)), gn.size)
            acc.gram.add(t, blk.s, blk.r, blk.e, d)
            f, S, bands = _trial_bands(cfg, sweep, x, keep_spectra)
            acc.bands[t] = bands
            if keep_spectra:
                acc.spectra[t] = S
                acc.psd_f = f
    return accs, lambdas


def run_backoff_sweep(cfg, scheme, theta=None, sweep=None, trial_ids=None, keep_spectra=False,
                      strict=True):
    """Operating points of one scheme over the sweep's backoff grid."""
    sweep = SweepConfig() if sweep is None else sweep
    cfg = reference_config(cfg)
    spec = make_spec(scheme, theta, sweep.transmission, cfg)
    trial_ids = range(sweep.trials) if trial_ids is None else trial_ids
    accs, lambdas = accumulate_operating_points(
        cfg, spec, sweep.backoffs_db, trial_ids, sweep.seed, sweep, keep_spectra=keep_spectra
    )
    return [
        accs[bo].finalize(scheme, spec.theta, bo, lambdas[bo], cfg.K, strict=strict)
        for bo in sweep.backoffs_db
    ]


def run_operating_point(cfg, scheme, backoff_db, theta=None, trials=200, seed=0, amplifier=True,
                        sweep=None, keep_spectra=False, strict=True):
    """Measure one operating point.

    ``amplifier=False`` replaces the amplifier with an ideal linear gain, in
    which case the efficiency is reported as NaN.
    """
    sweep = (SweepConfig() if sweep is None else sweep).with_(trials=trials, seed=seed)
    cfg = reference_config(cfg)
    spec = make_spec(scheme, theta, sweep.transmission, cfg)
    accs, lambdas = accumulate_operating_points(
        cfg, spec, [backoff_db], range(trials), seed, sweep, linear=not amplifier,
        keep_spectra=keep_spectra,
    )
    key = backoff_db if amplifier else None
    lam = lambdas[key] if amplifier else None
    return accs[key].finalize(scheme, spec.theta, key, lam, cfg.K, strict=strict)


def eta_max(points, aclr_max_db):
    """Highest efficiency among ``points`` whose ACLR meets the limit (0 if none)."""
    ok = [p.eta for p in points if aclr_max_db is None or p.aclr_db <= aclr_max_db]
    return max(ok) if ok else 0.0


# --------------------------------------------------------------------------
# Rates


def drop_rates(cfg, point, P, drops=100, seed=0):
    """Per-drop max-min sum rates for radiated power ``P`` at an operating point.

    Each drop places the users at random on the annulus.  Estimate and error
    variances come from the pilot statistics of that drop; the interference
    scales with ``delta_k`` relative to the reference measurement, the
    in-band distortion is the reference value and taken independent of the
    allocation.
    """
    dec = point.decomposition
    rates = np.empty(drops)
    for i in range(drops):
        beta = draw_pathloss(cfg.with_(fixed_beta=None), rng_for(seed, "drop", i))
        delta, err = lmmse_variances(cfg, beta)
        model = AllocationModel(
            beta=beta, delta=delta, g=np.mean(np.abs(dec.g)), c=_mean_c(dec),
            rho=np.mean(dec.rho), I=np.mean(dec.I / dec.delta) * delta, E=err,
            Dprime=float(np.mean(dec.D)), Dsecond=0.0, P=P, N0_over_T=cfg.noise_density_ratio,
        )
        xi = allocate(model)
        rates[i] = np.sum(np.log2(1.0 + achieved_sinr(model, xi)))
    return rates


def _mean_c(dec):
    # c measured relative to the real, positive part of g
    return np.mean(dec.c * np.conj(dec.g) / np.abs(dec.g))


def rate_for_point(cfg, point, p_cons, drops=100, seed=0):
    """Mean sum rate and its standard error at consumed power ``p_cons``."""
    r = drop_rates(cfg, point, point.eta * p_cons, drops, seed)
    return float(r.mean()), float(r.std(ddof=1) / np.sqrt(r.size))


def p_cons_from_db(cfg, db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) * cfg.noise_density_ratio / cfg.beta_min


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    table: list = field(default_factory=list)

    COLUMNS = ("scheme", "P_cons", "best_eta", "best_theta", "sum_rate", "aclr", "backoff",
               "sum_rate_se", "eta_se", "aclr_se")


def optimize_rate(cfg, points_by_theta, p_cons, aclr_max_db, drops=100, seed=0):
    """Grid maximum of the mean sum rate over ``(theta, backoff)``.

    ``points_by_theta`` maps theta to the operating points of its backoff
    sweep.  Only points with efficiency up to ``eta_max`` are admissible.
    Returns ``(best, table)`` where ``table`` lists every evaluation as
    ``(theta, point, rate, rate_se)``.
    """
    all_points = [p for pts in points_by_theta.values() for p in pts]
    cap = eta_max(all_points, aclr_max_db)
    table = []
    for theta, pts in points_by_theta.items():
        for p in pts:
            if p.eta > cap:
                continue
            r, se = rate_for_point(cfg, p, p_cons, drops, seed)
            table.append((theta, p, r, se))
    if not table:
        raise ValueError("no admissible operating point")
    best = max(table, key=lambda row: row[2])
    return best, table


def rate_power_sweep(cfg, sweep, schemes=None, progress=None):
    """Sum rate versus consumed power for every scheme (ACLR constraint from ``sweep``)."""
    ref = reference_config(cfg)
    result = SweepResult()
    for scheme in schemes or sweep.schemes:
        grid = sweep_theta_grid(ref, scheme, sweep)
        points_by_theta = {}
        for theta in grid:
            # extreme grid parameters can have noisy gains; their standard
            # errors are carried into the rows instead of aborting the scan
            points_by_theta[theta] = run_backoff_sweep(ref, scheme, theta, sweep, strict=False)
            if progress:
                progress(scheme, theta)
        for db in sweep.p_cons_db:
            pc = float(p_cons_from_db(cfg, db))
            (theta, p, r, se), table = optimize_rate(cfg, points_by_theta, pc, sweep.aclr_max_db,
                                                     sweep.drops, sweep.seed)
            result.table.extend((scheme, pc, *row) for row in table)
            result.rows.append({
                "scheme": scheme, "P_cons": pc, "best_eta": p.eta, "best_theta": theta,
                "sum_rate": r, "aclr": p.aclr_db, "backoff": p.backoff_db,
                "sum_rate_se": se, "eta_se": p.eta_se, "aclr_se": p.aclr_se_db,
            })
    return result


def sweep_theta_grid(cfg, scheme, sweep):
    if scheme == "RZF" and sweep.rzf_rho_grid:
        return tuple(sweep.rzf_rho_grid)
    if scheme == "DTCE" and sweep.dtce_gamma_grid:
        return tuple(sweep.dtce_gamma_grid)
    return theta_grid(cfg, scheme, sweep.theta_points)


# --------------------------------------------------------------------------
# Amplitude statistics and tap profiles


def par_ensemble(cfg, scheme, theta=None, blocks=40, seed=0, transmission="sc"):
    """Pulse-shaped pre-amplifier antenna signals, ``(blocks, M, N*kappa)``."""
    cfg = reference_config(cfg)
    spec = make_spec(scheme, theta, transmission, cfg)
    return np.stack([simulate_block(cfg, spec, seed, t, oversampled=True).u_os for t in range(blocks)])


def zf_tap_energy(cfg, realizations=50, seed=0):
    """Mean normalised ZF tap-energy profile (fftshifted) over channel draws."""
    from .channel import channel_dft, draw_channel, estimate_channel

    cfg = reference_config(cfg)
    acc = np.zeros(cfg.N)
    for i in range(realizations):
        ch = draw_channel(cfg, rng_for(seed, "fading", i), pathloss=np.full(cfg.K, cfg.fixed_beta))
        est = estimate_channel(ch, cfg, rng_for(seed, "estimate", i))
        acc += zf_tap_profile(channel_dft(est.est_taps, cfg.N))[1]
    return acc / realizations


# --------------------------------------------------------------------------
# Configuration files and run records

_SIM_FIELDS = {f.name: f for f in fields(SimulationConfig)}
_SWEEP_FIELDS = {f.name: f for f in fields(SweepConfig)}


def _parse_value(raw, default):
    raw = raw.strip()
    if raw.lower() in ("none", ""):
        return None
    if isinstance(default, tuple):
        return tuple(float(v) if _is_number(v) else v.strip() for v in raw.replace(",", " ").split())
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if _is_number(raw):
        v = float(raw)
        return int(v) if v.is_integer() and "." not in raw and "e" not in raw.lower() else v
    return raw


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_config(path=None, overrides=None):
    """Read an INI file with ``[simulation]`` and ``[sweep]`` sections.

    Keys are the field names of :class:`SimulationConfig` and
    :class:`SweepConfig`; unknown keys are rejected.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # field names are case sensitive (M, K, L, N, T, P)
    if path is not None:
        if not parser.read(path, encoding="utf-8"):
            raise FileNotFoundError(path)
    sim_kw, sweep_kw = {}, {}
    for section, table, out, defaults in (
        ("simulation", _SIM_FIELDS, sim_kw, SimulationConfig()),
        ("sweep", _SWEEP_FIELDS, sweep_kw, SweepConfig()),
    ):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in table:
                raise KeyError(f"unknown key {key!r} in [{section}]")
            out[key] = _parse_value(raw, getattr(defaults, key))
    for k, v in (overrides or {}).items():
        (sim_kw if k in _SIM_FIELDS else sweep_kw)[k] = v
    if "schemes" in sweep_kw and sweep_kw["schemes"] is not None:
        sweep_kw["schemes"] = tuple(str(s).upper() for s in sweep_kw["schemes"])
    return SimulationConfig(**sim_kw), SweepConfig(**sweep_kw)


def config_hash(cfg, sweep):
    blob = json.dumps({"simulation": asdict(cfg), "sweep": asdict(sweep)}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def write_manifest(out_dir, cfg, sweep, command, files):
    record = {
        "command": command,
        "config_hash": config_hash(cfg, sweep),
        "seed": sweep.seed,
        "git_describe": _git_describe(),
        "simulation": asdict(cfg),
        "sweep": asdict(sweep),
        "files": sorted(files),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, default=str)
    return path


# --------------------------------------------------------------------------
# Figure data


def emit_figures(out_dir, results):
    """Write CSV bundles for the figure analogues present in ``results``.

    ``results`` may contain ``"ccdf"`` (scheme -> (thresholds_db, probs)),
    ``"psd"`` (label -> (freq_over_B, dbc_per_hz)), ``"taps"``
    (label -> profile), ``"distortion"`` (list of OperatingPoint),
    ``"rate_power"`` (SweepResult).  Missing keys produce header-only files
    for the figures requested with an empty value.  Returns the written paths.
    """
    from .metrics import write_psd_csv

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for scheme, (thr, prob) in sorted(results.get("ccdf", {}).items()):
        p = os.path.join(out_dir, f"ccdf_{scheme}.csv")
        write_ccdf_csv(p, thr, prob)
        written.append(p)
    for label, (f, s) in sorted(results.get("psd", {}).items()):
        p = os.path.join(out_dir, f"psd_{label}.csv")
        write_psd_csv(p, f, s)
        written.append(p)
    if "taps" in results:
        p = os.path.join(out_dir, "zf_taps.csv")
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "tap", "energy"])
            for label, prof in sorted(results["taps"].items()):
                n = len(prof)
                for i, v in enumerate(prof):
                    w.writerow([label, i - n // 2, repr(float(v))])
        written.append(p)
    if "distortion" in results:
        p = os.path.join(out_dir, "distortion_sweep.csv")
        write_distortion_csv(p, results["distortion"])
        written.append(p)
    if "rate_power" in results:
        p = os.path.join(out_dir, "rate_power.csv")
        write_rate_csv(p, results["rate_power"])
        written.append(p)
    return written


DISTORTION_COLUMNS = ("scheme", "theta", "backoff", "eta", "eta_se", "aclr_db", "aclr_se",
                      "clip_db", "clip_se", "sigma2", "sigma2_se", "lambda0", "trials")


def write_distortion_csv(path, points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(DISTORTION_COLUMNS)
        for p in points:
            dec = p.decomposition
            clip = float(np.mean(dec.clip_power_db))
            clip_se = float(np.sqrt(np.mean(dec.clip_power_db_se**2) / dec.g.size))
            s2 = float(np.mean(dec.sigma2))
            s2_se = float(np.sqrt(np.mean(dec.sigma2_se**2) / dec.g.size))
            w.writerow([p.scheme, "" if p.theta is None else repr(float(p.theta)),
                        repr(float(p.backoff_db)), repr(p.eta), repr(p.eta_se), repr(p.aclr_db),
                        repr(p.aclr_se_db), repr(clip), repr(clip_se), repr(s2), repr(s2_se),
                        repr(float(p.lambda0)) if p.lambda0 is not None else "", p.n_trials])


def write_rate_csv(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SweepResult.COLUMNS)
        for row in result.rows:
            w.writerow([row[c] if isinstance(row[c], str) else
                        ("" if row[c] is None else repr(float(row[c]))) for c in SweepResult.COLUMNS])
