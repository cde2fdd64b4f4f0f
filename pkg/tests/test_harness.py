import json
from importlib import resources

import numpy as np
import pytest

from mimopa.channel import SimulationConfig
from mimopa.harness import (
    MIN_TRIALS,
    SweepConfig,
    SweepResult,
    accumulate_operating_points,
    config_hash,
    emit_figures,
    eta_max,
    load_config,
    make_spec,
    nominal_theta,
    optimize_rate,
    p_cons_from_db,
    rate_for_point,
    rate_power_sweep,
    run_backoff_sweep,
    run_operating_point,
    theta_grid,
    write_manifest,
    write_rate_csv,
    zf_tap_energy,
)
from mimopa.metrics import link_metrics
from mimopa.waveform import par_ccdf, read_ccdf_csv

SMALL = SimulationConfig(M=8, K=2, L=2, N=16)
SMALL_SWEEP = SweepConfig(schemes=("MR",), backoffs_db=(0.0, 6.0, 12.0), theta_points=1,
                          p_cons_db=(0.0, 20.0), trials=30, drops=30, lambda_cal_blocks=4)


# --- configuration ------------------------------------------------------------------


def test_sweep_config_validation():
    for kw in (dict(schemes=()), dict(backoffs_db=()), dict(p_cons_db=()), dict(aclr_max_db=0.0),
               dict(trials=10), dict(drops=5), dict(theta_points=0)):
        with pytest.raises(ValueError):
            SweepConfig(**kw)
    assert SweepConfig(aclr_max_db=None).aclr_max_db is None


def test_theta_grids_and_nominal_values():
    cfg = SimulationConfig(fixed_beta=0.5)
    g = theta_grid(cfg, "DTCE", 25)
    assert len(g) == 25
    assert g[0] == pytest.approx(0.1 * (cfg.M - cfg.K)) and g[-1] == pytest.approx(10 * (cfg.M - cfg.K))
    r = theta_grid(cfg, "RZF", 7)
    scale = cfg.K * cfg.noise_density_ratio / (cfg.P * 0.5)
    assert r[0] == pytest.approx(1e-3 * scale) and r[-1] == pytest.approx(1e3 * scale)
    assert theta_grid(cfg, "MR") == (None,)
    assert nominal_theta(cfg, "DTCE") == 14.0
    assert make_spec("RZF", cfg=cfg).rzf_rho == pytest.approx(scale)
    assert make_spec("ZF", cfg=cfg).theta is None


def test_shipped_config_loads(tmp_path):
    path = resources.files("mimopa") / "data" / "default.ini"
    cfg, sweep = load_config(str(path))
    assert cfg.M >= cfg.K and sweep.trials >= MIN_TRIALS
    schema = json.loads((resources.files("mimopa") / "data" / "config_schema.json").read_text())
    assert set(schema) >= {"simulation", "sweep"}


def test_config_file_parsing(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[simulation]\nM = 16\nK = 2\nfixed_beta = 0.5\ntap_model = symbol\n"
                 "[sweep]\nschemes = mr dtce\nbackoffs_db = 0 3 6\ntrials = 40\naclr_max_db = none\n")
    cfg, sweep = load_config(str(p), overrides={"seed": 7, "N": 32})
    assert (cfg.M, cfg.K, cfg.N, cfg.fixed_beta, cfg.tap_model) == (16, 2, 32, 0.5, "symbol")
    assert sweep.schemes == ("MR", "DTCE")
    assert sweep.backoffs_db == (0.0, 3.0, 6.0)
    assert sweep.aclr_max_db is None and sweep.seed == 7 and sweep.trials == 40


def test_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[simulation]\nantennas = 16\n")
    with pytest.raises(KeyError):
        load_config(str(p))
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.ini"))


def test_manifest_records_run(tmp_path):
    cfg, sweep = SimulationConfig(), SweepConfig(seed=3)
    path = write_manifest(str(tmp_path), cfg, sweep, "psd", ["b.csv", "a.csv"])
    rec = json.loads(open(path).read())
    assert rec["seed"] == 3 and rec["files"] == ["a.csv", "b.csv"]
    assert rec["config_hash"] == config_hash(cfg, sweep)
    assert rec["git_describe"]
    assert config_hash(cfg, sweep) != config_hash(cfg.with_(M=64), sweep)


# --- operating points -------------------------------------------------------------------


def test_linear_zf_perfect_csi_rate_matches_closed_form():
    cfg = SimulationConfig(tap_model="symbol", fixed_beta=1.0, rho_p=1e12)
    pt = run_operating_point(cfg, "ZF", 0.0, trials=200, amplifier=False)
    dec = pt.decomposition
    assert np.isnan(pt.eta)
    M, K, P = cfg.M, cfg.K, 3.0
    lm = link_metrics(dec, P, 1.0)
    want = np.log2(1 + P * (M - K) / K)  # xi = 1/K, no interference, no error
    # propagate the gain's standard error into the rate
    slope = P / K / np.log(2) / (1 + P * dec.g2 / K)
    assert np.all(np.abs(lm.rate - want) <= 3 * slope * dec.se["g2"] + 0.05 * want)
    assert np.all(dec.I < 0.01)


def test_constant_envelope_is_more_efficient_than_mr_in_saturation():
    # in the linear region a Rayleigh-like envelope has the larger E[g^2]/E[g]
    # at equal RMS drive, so the ordering is asserted only near saturation
    cfg = SimulationConfig(M=16, K=2, L=2, N=32)
    for bo in (-3.0, 0.0):
        dtce = run_operating_point(cfg, "DTCE", bo, trials=30, strict=False)
        mr = run_operating_point(cfg, "MR", bo, trials=30, strict=False)
        assert dtce.eta > mr.eta
        assert dtce.eta <= np.pi / 4


def test_too_few_trials_rejected():
    with pytest.raises(ValueError):
        run_operating_point(SMALL, "MR", 0.0, trials=10, strict=False)


def test_backoff_sweep_shapes_and_monotone_efficiency():
    pts = run_backoff_sweep(SMALL, "MR", sweep=SMALL_SWEEP, strict=False)
    assert [p.backoff_db for p in pts] == [0.0, 6.0, 12.0]
    etas = [p.eta for p in pts]
    assert etas[0] > etas[1] > etas[2]
    assert all(p.n_trials == 30 and p.eta_se > 0 and p.aclr_se_db > 0 for p in pts)


def test_shard_merge_matches_single_run():
    cfg = SMALL.with_(fixed_beta=1.0)
    spec = make_spec("MR", cfg=cfg)
    bos = [0.0, 6.0]
    whole, lams = accumulate_operating_points(cfg, spec, bos, range(40), 0, SMALL_SWEEP)
    a, _ = accumulate_operating_points(cfg, spec, bos, [3, 17, 25, 0], 0, SMALL_SWEEP, lambdas=lams)
    b, _ = accumulate_operating_points(cfg, spec, bos, [i for i in range(40) if i not in (3, 17, 25, 0)],
                                       0, SMALL_SWEEP, lambdas=lams)
    for bo in bos:
        p1 = whole[bo].finalize("MR", None, bo, lams[bo], cfg.K, strict=False)
        p2 = b[bo].merge(a[bo]).finalize("MR", None, bo, lams[bo], cfg.K, strict=False)
        assert (p1.eta, p1.eta_se, p1.aclr_db, p1.aclr_se_db) == (p2.eta, p2.eta_se, p2.aclr_db, p2.aclr_se_db)
        np.testing.assert_array_equal(p1.decomposition.g, p2.decomposition.g)
        np.testing.assert_array_equal(p1.decomposition.D, p2.decomposition.D)


def test_eta_max_selection():
    class P:
        def __init__(self, eta, aclr):
            self.eta, self.aclr_db = eta, aclr

    pts = [P(0.5, -30), P(0.3, -44), P(0.2, -50), P(0.1, -60)]
    assert eta_max(pts, -45) == 0.2
    assert eta_max(pts, None) == 0.5
    assert eta_max(pts, -70) == 0.0


# --- rates -------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def mr_points():
    return run_backoff_sweep(SMALL, "MR", sweep=SMALL_SWEEP, strict=False)


def test_mr_rate_saturates_at_interference_ceiling(mr_points):
    pt = mr_points[-1]
    hi = float(p_cons_from_db(SMALL, 80.0))
    r1, _ = rate_for_point(SMALL, pt, hi, drops=30)
    r2, _ = rate_for_point(SMALL, pt, 10 * hi, drops=30)
    assert abs(r2 / r1 - 1) < 0.01
    lo, _ = rate_for_point(SMALL, pt, float(p_cons_from_db(SMALL, 0.0)), drops=30)
    assert lo < r1


def test_optimizer_reports_grid_maximum(mr_points):
    pc = float(p_cons_from_db(SMALL, 10.0))
    best, table = optimize_rate(SMALL, {None: mr_points}, pc, -20.0, drops=30)
    assert best[2] == max(row[2] for row in table)
    cap = eta_max(mr_points, -20.0)
    assert all(row[1].eta <= cap for row in table)


def test_noise_limited_choice_uses_highest_admissible_efficiency(mr_points):
    pc = float(p_cons_from_db(SMALL, -10.0))
    limit = mr_points[1].aclr_db + 1e-9
    best, _ = optimize_rate(SMALL, {None: mr_points}, pc, limit, drops=30)
    assert best[1].eta == eta_max(mr_points, limit)


def test_rate_power_sweep_is_deterministic(tmp_path):
    a = rate_power_sweep(SMALL, SMALL_SWEEP)
    b = rate_power_sweep(SMALL, SMALL_SWEEP)
    write_rate_csv(tmp_path / "a.csv", a)
    write_rate_csv(tmp_path / "b.csv", b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(a.rows) == len(SMALL_SWEEP.p_cons_db)
    header = (tmp_path / "a.csv").read_text().splitlines()[0].split(",")
    assert header == list(SweepResult.COLUMNS)


# --- figure data ----------------------------------------------------------------------


def test_empty_results_give_header_only_files(tmp_path):
    paths = emit_figures(str(tmp_path), {"distortion": [], "rate_power": SweepResult(), "taps": {}})
    assert len(paths) == 3
    for p in paths:
        assert len(open(p).read().splitlines()) == 1


def test_ccdf_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
    thr = np.round(np.arange(0, 12.05, 0.1), 10)
    prob = par_ccdf(x, thr)
    (path,) = emit_figures(str(tmp_path), {"ccdf": {"MR": (thr, prob)}})
    t2, p2 = read_ccdf_csv(path)
    np.testing.assert_array_equal(t2, thr)
    np.testing.assert_array_equal(p2, prob)


def test_zf_tap_tail_shrinks_with_antennas(tmp_path):
    def tail(M):
        cfg = SimulationConfig(M=M, K=10, L=4, N=64)
        prof = zf_tap_energy(cfg, realizations=10)
        delays = np.arange(cfg.N) - cfg.N // 2
        return prof[np.abs(delays) > cfg.L].sum() / prof.sum(), prof

    t11, p11 = tail(11)
    t100, p100 = tail(100)
    assert t11 > t100
    (path,) = emit_figures(str(tmp_path), {"taps": {"M11": p11, "M100": p100}})
    assert len(open(path).read().splitlines()) == 1 + 2 * 64
