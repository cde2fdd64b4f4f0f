import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimopa.allocation import (
    AllocationModel,
    InfeasibleAllocationError,
    achieved_sinr,
    allocate,
    closed_form_allocation,
    closed_form_common_sinr,
    fit_distortion_model,
    mr_allocation,
    solve_common_sinr,
    write_allocation_csv,
    zf_allocation,
)
from mimopa.amplifier import RappAmplifier, calibrate_lambda0
from mimopa.chain import calibrate_alpha, distortion_stream, simulate_block
from mimopa.channel import SimulationConfig
from mimopa.metrics import GramAccumulator, sinr
from mimopa.precoder import PrecoderSpec


def random_model(seed, K, Dsecond=0.0, distortion=True):
    rng = np.random.default_rng(seed)
    g = np.sqrt(rng.uniform(10, 50, K)) * np.exp(1j * rng.uniform(0, 2 * np.pi, K))
    return AllocationModel(
        beta=10 ** rng.uniform(-2, 1, K),
        delta=rng.uniform(0.2, 1.0, K),
        g=g,
        c=-0.05 * g if distortion else 0.0,
        rho=(-0.03 + 0.01j) if distortion else 0.0,
        I=rng.uniform(0.0, 1.0, K),
        E=rng.uniform(0.0, 0.5, K),
        Dprime=0.02 if distortion else 0.0,
        Dsecond=Dsecond,
        P=10.0,
    )


# --- distortion line ------------------------------------------------------------


def test_fit_recovers_exact_line():
    x = np.linspace(0.0, 0.1, 7)
    d1, d2 = fit_distortion_model(x, 0.01 + 0.2 * x)
    assert d1 == pytest.approx(0.01, abs=1e-14)
    assert d2 == pytest.approx(0.2, rel=1e-12)


def test_fit_matches_normal_equations():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 0.05, 40)
    D = 0.02 + 0.3 * x + 1e-3 * rng.standard_normal(40)
    A = np.column_stack([np.ones_like(x), x])
    want = np.linalg.solve(A.T @ A, A.T @ D)
    np.testing.assert_allclose(fit_distortion_model(x, D), want, rtol=1e-10)


def test_fit_clamps_negative_coefficients():
    x = np.linspace(0, 1, 5)
    d1, d2 = fit_distortion_model(x, 0.5 - 0.1 * x)
    assert d2 == 0.0 and d1 == pytest.approx(0.45)
    d1, d2 = fit_distortion_model(x, -0.1 + 1.0 * x)
    assert d1 == 0.0 and d2 > 0


def test_fit_rejects_degenerate_abscissae():
    with pytest.raises(ValueError):
        fit_distortion_model([0.1, 0.1, 0.1], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        fit_distortion_model([0.1, 0.2], [1.0])


def test_distortion_slope_is_small_with_many_users():
    K, M = 50, 100
    cfg = SimulationConfig(M=M, K=K, fixed_beta=1.0, tap_model="symbol")
    spec = PrecoderSpec("MR")
    xi = np.linspace(0.25, 1.75, K)
    xi /= xi.sum()
    alpha = calibrate_alpha(cfg, spec, 0, power_alloc=xi)
    ens = np.concatenate(
        [simulate_block(cfg, spec, 9, t, alpha=alpha, power_alloc=xi, oversampled=True).u_os for t in range(8)],
        axis=-1,
    )
    amp = RappAmplifier(M, backoff_db=1.0)
    amp = amp.with_(lambda0=calibrate_lambda0(ens, amp, P=M * np.mean(np.abs(ens) ** 2)))
    acc = GramAccumulator(K)
    for t in range(60):
        b = simulate_block(cfg, spec, 0, t, alpha=alpha, power_alloc=xi, oversampled=True)
        acc.add(t, b.s, b.r, b.e, distortion_stream(cfg, b, amp))
    dec = acc.finalize(b.delta, xi, strict=False)
    x = b.delta * xi
    d1, d2 = fit_distortion_model(x, dec.D)
    assert d1 > 0
    # over the whole range of abscissae the slope moves D by under 10% of D'
    assert d2 * x.max() < 0.1 * d1


# --- common SINR and allocation --------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_closed_form_matches_root_search(seed):
    m = random_model(seed, 6)
    S0 = closed_form_common_sinr(m)
    # a vanishing slope sends the root search down the bracketing path
    tiny = m.with_(Dsecond=1e-14)
    assert solve_common_sinr(tiny) == pytest.approx(S0, rel=1e-9)
    xi = allocate(m)
    np.testing.assert_allclose(xi, closed_form_allocation(m), rtol=1e-12)


def test_single_user_gets_full_power():
    m = random_model(1, 1)
    xi = allocate(m)
    assert xi[0] == pytest.approx(1.0, abs=1e-12)
    dec = type("D", (), dict(g=m.g, c=m.c, rho=m.rho, I=m.I, E=m.E, D=np.array([m.Dprime]),
                             xi=np.ones(1), delta=m.delta))
    assert solve_common_sinr(m) == pytest.approx(sinr(dec, m.P, m.beta)[0], rel=1e-12)


def test_symmetric_users_share_equally():
    K = 5
    m = AllocationModel(beta=np.full(K, 0.3), delta=0.7, g=5.0, c=-0.2, rho=-0.01, I=0.4,
                        E=0.3, Dprime=0.01, P=4.0)
    xi = allocate(m)
    np.testing.assert_allclose(xi, 1 / K, rtol=1e-12)
    dec = type("D", (), dict(g=m.g, c=m.c, rho=m.rho, I=m.I, E=m.E, D=np.full(K, 0.01),
                             xi=np.full(K, 1 / K), delta=m.delta))
    assert solve_common_sinr(m) == pytest.approx(sinr(dec, m.P, m.beta)[0], rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), K=st.integers(2, 12), slope=st.floats(0.0, 0.5))
def test_allocation_sums_to_one_and_equalizes(seed, K, slope):
    m = random_model(seed, K, Dsecond=slope)
    S = solve_common_sinr(m)
    xi = allocate(m, S)
    assert np.all(xi >= 0)
    assert abs(xi.sum() - 1.0) < 1e-10
    s = achieved_sinr(m, xi)
    assert np.max(np.abs(s / S - 1)) < 1e-8
    assert s.max() - s.min() < 1e-6 * S


def test_largest_root_lies_below_singularity():
    m = random_model(3, 4, Dsecond=2.0)
    S = solve_common_sinr(m)
    assert 0 < S < np.min(m.gain) / m.Dsecond


def test_infeasible_inputs_raise():
    m = random_model(4, 3)
    m.c = -m.g  # every user loses its whole gain
    with pytest.raises(InfeasibleAllocationError):
        solve_common_sinr(m)
    with pytest.raises(InfeasibleAllocationError):
        allocate(random_model(4, 3), common_sinr=-1.0)
    with pytest.raises(ValueError):
        random_model(5, 2, Dsecond=-1.0)
    with pytest.raises(ValueError):
        AllocationModel(beta=np.array([1.0, 0.0]), delta=1.0, g=1.0, c=0.0, rho=0.0, I=0.0, E=0.0)
    with pytest.raises(ValueError):
        closed_form_common_sinr(random_model(6, 2, Dsecond=0.1))


def test_mr_special_form():
    rng = np.random.default_rng(7)
    K, M, P = 8, 64, 5.0
    beta = 10 ** rng.uniform(-2, 0, K)
    delta = rng.uniform(0.2, 0.9, K)
    rho = -0.02 + 0.005j
    # maximum ratio: g = sqrt(M), I = delta, E = 1 - delta
    m = AllocationModel(beta=beta, delta=delta, g=np.sqrt(M), c=0.0, rho=rho, I=delta, E=1 - delta,
                        Dprime=0.03, P=P)
    np.testing.assert_allclose(allocate(m), mr_allocation(P, beta, delta, rho, 0.03), rtol=1e-10)


def test_zf_special_form():
    rng = np.random.default_rng(8)
    K, M, P = 8, 64, 5.0
    beta = 10 ** rng.uniform(-2, 0, K)
    delta = rng.uniform(0.2, 0.9, K)
    E = 1 - delta
    m = AllocationModel(beta=beta, delta=delta, g=np.sqrt(M - K), c=0.0, rho=0.0, I=0.0, E=E,
                        Dprime=0.03, P=P)
    np.testing.assert_allclose(allocate(m), zf_allocation(P, beta, delta, E, 0.0, 0.03), rtol=1e-10)


def test_two_users_match_simplex_grid_search():
    m = random_model(9, 2, Dsecond=0.3)
    grid = np.linspace(0, 1, 200_001)
    worst = np.array([achieved_sinr(m, [a, 1 - a]).min() for a in grid[::100]])
    coarse = grid[::100][worst.argmax()]
    fine = grid[(grid > coarse - 1e-3) & (grid < coarse + 1e-3)]
    worst_fine = np.array([achieved_sinr(m, [a, 1 - a]).min() for a in fine])
    best = fine[worst_fine.argmax()]
    xi = allocate(m)
    assert abs(xi[0] - best) <= 2 * (grid[1] - grid[0])
    assert achieved_sinr(m, xi).min() >= worst_fine.max() * (1 - 1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_stronger_user_gets_less_power(seed):
    m = random_model(seed, 5)
    xi0 = allocate(m)
    k = seed % 5
    beta = m.beta.copy()
    beta[k] *= 3.0
    xi1 = allocate(m.with_(beta=beta))
    assert xi1[k] <= xi0[k] + 1e-15


def test_allocation_csv(tmp_path):
    m = random_model(10, 3)
    xi = allocate(m)
    write_allocation_csv(tmp_path / "a.csv", m, xi)
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "user,beta,delta,xi,sinr_db"
    assert len(rows) == 4
    sinr_db = [float(r.split(",")[-1]) for r in rows[1:]]
    assert max(sinr_db) - min(sinr_db) < 1e-6
