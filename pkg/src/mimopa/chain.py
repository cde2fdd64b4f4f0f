"""One cyclic-prefixed block through the downlink chain.

A trial draws (or reuses) a user drop, a fading block, a channel estimate and
symbols, precodes, and returns the streams the decomposition needs: the
desired symbols ``s``, the estimate-filtered received signal ``r`` and the
error-filtered signal ``e``, all in the detection domain (time for single
carrier, tones for OFDM).  With ``oversampled=True`` it also returns the
pulse-shaped antenna signals and the continuous-time channel response so the
amplifier distortion can be propagated exactly.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._random import rng_for
from .amplifier import amplify
from .channel import channel_dft, draw_channel, draw_pathloss, estimate_channel
from .precoder import (
    PrecoderSpec,
    dtce_precode,
    linear_weights,
    normalization_constant,
    precode_linear,
)
from .waveform import draw_symbols, pulse_shape_cyclic, pulse_spectrum, rrc_pulse, unitary_dft

__all__ = [
    "BlockStreams",
    "trial_pathloss",
    "calibrate_alpha",
    "simulate_block",
    "distortion_stream",
    "cyclic_pulse_spectrum",
]

ALPHA_CAL_REALIZATIONS = 200


@dataclass
class BlockStreams:
    s: np.ndarray
    r: np.ndarray
    e: np.ndarray
    u: np.ndarray
    delta: np.ndarray
    err_var: np.ndarray
    pathloss: np.ndarray
    u_os: np.ndarray | None = None
    H_os_f: np.ndarray | None = None
    dtce_converged: bool | None = None


@lru_cache(maxsize=16)
def cyclic_pulse_spectrum(cfg):
    pulse = rrc_pulse(cfg.rolloff, cfg.kappa, cfg.half_span, cfg.T)
    pf = pulse_spectrum(pulse, cfg.N * cfg.kappa)
    pf.setflags(write=False)
    return pf


def trial_pathloss(cfg, seed, trial):
    """Path losses of the drop that ``trial`` belongs to."""
    drop = trial // cfg.blocks_per_drop
    return draw_pathloss(cfg, rng_for(seed, "drop", drop))


def _xi_key(power_alloc, K):
    if power_alloc is None:
        return None
    return tuple(float(v) for v in np.asarray(power_alloc, dtype=float).reshape(K))


@lru_cache(maxsize=256)
def _alpha_cached(cfg, spec, seed, realizations, xi_key):
    xi = np.full(cfg.K, 1.0 / cfg.K) if xi_key is None else np.array(xi_key)

    def ensemble():
        for i in range(realizations):
            beta = trial_pathloss(cfg, seed, i * cfg.blocks_per_drop)
            ch = draw_channel(cfg, rng_for(seed, "alpha_cal", i, 0), pathloss=beta)
            est = estimate_channel(ch, cfg, rng_for(seed, "alpha_cal", i, 1))
            yield linear_weights(channel_dft(est.est_taps, cfg.N), spec).freq_weights

    return normalization_constant(ensemble(), xi)


def calibrate_alpha(cfg, spec, seed=0, realizations=ALPHA_CAL_REALIZATIONS, power_alloc=None):
    """Ensemble normalisation constant for a linear scheme.

    Estimated once from ``realizations`` independent channel draws on a
    dedicated random stream, so every trial of a run shares it.
    """
    if spec.scheme == "DTCE":
        return 1.0
    return _alpha_cached(cfg, spec, int(seed), int(realizations), _xi_key(power_alloc, cfg.K))


def simulate_block(
    cfg,
    spec,
    seed,
    trial,
    alpha=None,
    power_alloc=None,
    oversampled=False,
    dtce_options=None,
    alpha_realizations=ALPHA_CAL_REALIZATIONS,
):
    """Run one block of the linear part of the chain.

    Returns a :class:`BlockStreams`.  ``alpha`` defaults to the calibrated
    ensemble constant for ``(cfg, spec, seed)``.
    """
    if not isinstance(spec, PrecoderSpec):
        raise TypeError("spec must be a PrecoderSpec")
    beta = trial_pathloss(cfg, seed, trial)
    ch = draw_channel(cfg, rng_for(seed, "fading", trial), pathloss=beta)
    est = estimate_channel(ch, cfg, rng_for(seed, "estimate", trial))
    frame = draw_symbols(
        cfg.K, cfg.N, rng_for(seed, "symbols", trial), power_alloc, cfg.constellation
    )
    Hhat_f = channel_dft(est.est_taps, cfg.N)
    converged = None
    if spec.scheme == "DTCE":
        res = dtce_precode(
            est.est_taps, frame.symbols, spec.dtce_gamma, spec.transmission, **(dtce_options or {})
        )
        u = res.u
        converged = res.converged
    else:
        if alpha is None:
            alpha = calibrate_alpha(cfg, spec, seed, alpha_realizations, power_alloc)
        W = linear_weights(Hhat_f, spec, alpha)
        u = precode_linear(W, frame.symbols, spec.transmission)

    U = np.fft.fft(u, axis=-1)
    r = np.fft.ifft(np.einsum("nkm,mn->kn", Hhat_f, U), axis=-1)
    e = np.fft.ifft(np.einsum("nkm,mn->kn", channel_dft(est.err_taps, cfg.N), U), axis=-1)
    if spec.transmission == "ofdm":
        r = unitary_dft(r, axis=-1)
        e = unitary_dft(e, axis=-1)

    out = BlockStreams(
        s=frame.symbols, r=r, e=e, u=u, delta=est.delta, err_var=est.err_var,
        pathloss=beta, dtce_converged=converged,
    )
    if oversampled:
        pf = cyclic_pulse_spectrum(cfg)
        out.u_os = pulse_shape_cyclic(u, pf, cfg.kappa)
        out.H_os_f = ch.tap_scale * np.fft.fft(ch.oversampled_taps, n=cfg.N * cfg.kappa, axis=-1)
    return out


def received_oversampled(cfg, H_os_f, x_os):
    """Matched-filtered, symbol-sampled response of every user to antenna signals ``x_os``."""
    pf = cyclic_pulse_spectrum(cfg)
    X = np.fft.fft(x_os, axis=-1)
    Y = np.einsum("kmf,mf->kf", H_os_f, X) * np.conj(pf) * (cfg.T / cfg.kappa)
    return np.fft.ifft(Y, axis=-1)[:, :: cfg.kappa]


def distortion_stream(cfg, block, amp, transmission="sc"):
    """In-band distortion ``d_k[n]`` seen by the users, in the detection domain.

    The amplified branch ``x/sqrt(P)`` and the linear branch ``u`` are driven
    by the same oversampled signal; their difference is propagated through
    the continuous-time channel and the matched filter.
    """
    amp1 = amp.with_(P=1.0)
    diff = amplify(block.u_os, amp1) - block.u_os
    d = received_oversampled(cfg, block.H_os_f, diff)
    if transmission == "ofdm":
        d = unitary_dft(d, axis=-1)
    return d
