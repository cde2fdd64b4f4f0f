import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimopa.amplifier import (
    CalibrationError,
    RappAmplifier,
    am_am,
    amplify,
    calibrate_lambda0,
    efficiency,
    one_db_compression_input,
    radiated_power,
    rapp_gain,
)
from mimopa.chain import calibrate_alpha, simulate_block
from mimopa.channel import SimulationConfig
from mimopa.precoder import PrecoderSpec


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_small_signal_is_linear():
    amp = RappAmplifier(M=16, p=2.0)
    u = 1e-2 * amp.u_max
    lin = amp.A_max / amp.u_max * u
    assert abs(am_am(u, amp) / lin - 1) < 1e-3


def test_gain_at_knee():
    amp = RappAmplifier(M=16, p=2.0, P=3.0)
    assert am_am(amp.u_max, amp) == pytest.approx(amp.A_max * 2 ** -0.25, rel=1e-14)


def test_saturation_limit():
    amp = RappAmplifier(M=4, p=2.0)
    assert am_am(1e8 * amp.u_max, amp) == pytest.approx(amp.A_max, rel=1e-12)
    assert am_am(np.inf, amp) == amp.A_max
    with pytest.raises(ValueError):
        am_am(-1.0, amp)


def test_one_db_compression_input():
    assert one_db_compression_input(2.0) == pytest.approx((10**0.2 - 1) ** 0.25, abs=1e-9)
    assert one_db_compression_input(2.0) == pytest.approx(0.8745, abs=1e-4)
    # a hard limiter is 1 dB below its linear extrapolation at 10**(1/20) times the knee
    assert one_db_compression_input(2000.0) == pytest.approx(10 ** (1 / 20), abs=1e-3)
    with pytest.raises(ValueError):
        one_db_compression_input(0.0)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0, 10.0])
def test_one_db_point_round_trip(p):
    x = one_db_compression_input(p)
    drop_db = 20 * np.log10(rapp_gain(x, p) / x)
    assert abs(drop_db + 1.0) < 1e-9


def test_amplify_preserves_phase():
    amp = RappAmplifier(M=8, backoff_db=2.0)
    x = crandn(np.random.default_rng(0), 1000) / np.sqrt(8)
    y = amplify(x, amp)
    np.testing.assert_allclose(np.angle(y), np.angle(x), atol=1e-12)
    assert amplify(np.zeros(3, dtype=complex), amp).tolist() == [0, 0, 0]


def test_output_never_exceeds_saturation():
    amp = RappAmplifier(M=8, backoff_db=-10.0)
    x = 100 * crandn(np.random.default_rng(1), 8, 1000)
    y = amplify(x, amp)
    assert np.all(np.abs(y) <= amp.A_max * (1 + 1e-12))
    assert np.sum(np.abs(y) ** 2, axis=0).max() <= amp.M * amp.A_max**2 * (1 + 1e-12)


def test_backoff_scales_input():
    a0 = RappAmplifier(M=4, backoff_db=0.0)
    a6 = RappAmplifier(M=4, backoff_db=6.0)
    assert a6.input_scale / a0.input_scale == pytest.approx(10 ** (-6 / 20), rel=1e-14)
    assert a0.b == pytest.approx(a0.input_scale**-2)
    # the RMS amplitude u_max sits exactly at the 1-dB point at 0 dB backoff
    assert a0.input_scale == pytest.approx(one_db_compression_input(2.0))


def test_invalid_amplifier():
    with pytest.raises(ValueError):
        RappAmplifier(M=0)
    with pytest.raises(ValueError):
        RappAmplifier(M=4, p=-1)
    with pytest.raises(ValueError):
        RappAmplifier(M=4, lambda0=0.0)


# --- calibration ------------------------------------------------------------------


def test_calibration_linear_regime():
    M = 16
    x = crandn(np.random.default_rng(2), M, 20000) / np.sqrt(M)
    amp = RappAmplifier(M=M, backoff_db=40.0, P=2.0)
    # target the ensemble's own linear power so that only clipping is corrected
    lam = calibrate_lambda0(x, amp, P=amp.P * M * np.mean(np.abs(x) ** 2))
    assert lam == pytest.approx(amp.input_scale, rel=1e-3)
    assert radiated_power(x, amp) == pytest.approx(amp.P, rel=0.005)


def test_calibration_constant_envelope_closed_form():
    M, a = 8, 0.6
    x = a * np.exp(2j * np.pi * np.random.default_rng(3).random((M, 500)))
    amp = RappAmplifier(M=M, backoff_db=1.0, P=5.0)
    lam = calibrate_lambda0(x, amp)
    # M * A_max^2 * r^2 = P with A_max = u_max sqrt(P) / lambda gives lambda = r
    want = float(rapp_gain(a * amp.input_scale / amp.u_max, amp.p))
    assert lam == pytest.approx(want, rel=1e-4)
    assert radiated_power(x, amp.with_(lambda0=lam)) == pytest.approx(amp.P, rel=1e-4)


def test_calibration_zero_signal_raises():
    with pytest.raises(CalibrationError):
        calibrate_lambda0(np.zeros((4, 10)), RappAmplifier(M=4))


def test_calibration_nonconvergence_raises():
    x = crandn(np.random.default_rng(4), 4, 100)
    with pytest.raises(CalibrationError):
        calibrate_lambda0(x, RappAmplifier(M=4), max_iter=1, tol=0.0)


def test_mr_calibration_holds_on_held_out_ensemble():
    cfg = SimulationConfig(fixed_beta=1.0)
    spec = PrecoderSpec("MR")
    alpha = calibrate_alpha(cfg, spec, 0)

    def ensemble(seed):
        return np.concatenate(
            [simulate_block(cfg, spec, seed, t, alpha=alpha, oversampled=True).u_os for t in range(1000)],
            axis=-1,
        )

    amp = RappAmplifier(cfg.M, backoff_db=1.0)
    lam = calibrate_lambda0(ensemble(1), amp)
    assert lam < amp.input_scale  # clipping removes power, so the correction raises A_max
    assert radiated_power(ensemble(2), amp.with_(lambda0=lam)) == pytest.approx(amp.P, rel=0.005)


# --- efficiency -----------------------------------------------------------------


def test_efficiency_constant_envelope_at_saturation():
    amp = RappAmplifier(M=4)
    x = 1e4 * amp.u_max * np.exp(1j * np.linspace(0, 6, 50))
    assert efficiency(amp, x) == pytest.approx(np.pi / 4, rel=1e-3)


def test_efficiency_constant_envelope_at_half_saturation():
    amp = RappAmplifier(M=4, p=2.0)
    c = 0.5 ** (2 * amp.p)
    x_norm = (c / (1 - c)) ** (1 / (2 * amp.p))  # rapp_gain(x_norm) = 1/2
    assert rapp_gain(x_norm, amp.p) == pytest.approx(0.5, rel=1e-14)
    u = x_norm * amp.u_max / amp.input_scale
    assert efficiency(amp, np.full(100, u)) == pytest.approx(np.pi / 8, rel=1e-12)


def test_efficiency_zero_signal():
    assert efficiency(RappAmplifier(M=4), np.zeros(16)) == 0.0


@settings(max_examples=100, deadline=None)
@given(
    scale=st.floats(1e-3, 1e3), p=st.floats(0.5, 8.0), bo=st.floats(-10, 20),
    seed=st.integers(0, 2**31),
)
def test_efficiency_never_exceeds_class_b_limit(scale, p, bo, seed):
    amp = RappAmplifier(M=4, p=p, backoff_db=bo)
    x = scale * crandn(np.random.default_rng(seed), 256)
    assert 0 < efficiency(amp, x) <= np.pi / 4 * (1 + 1e-12)


def test_efficiency_nonincreasing_in_backoff():
    rng = np.random.default_rng(5)
    x = crandn(rng, 16, 4000) / 4
    etas = [efficiency(RappAmplifier(M=16, backoff_db=bo), x) for bo in np.arange(-4, 15, 1.0)]
    assert np.all(np.diff(etas) <= 0)
