"""Frequency-selective Rayleigh channels, path loss and LMMSE estimate statistics."""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from ._random import as_generator, crandn
from .waveform import rrc_pulse

__all__ = [
    "SimulationConfig",
    "ChannelRealization",
    "ChannelEstimate",
    "draw_channel",
    "draw_user_distances",
    "draw_pathloss",
    "pathloss_from_distance",
    "lmmse_variances",
    "estimate_channel",
    "channel_dft",
    "symbol_tap_response",
]

TAP_MODELS = ("oversampled", "symbol")


@dataclass(frozen=True)
class SimulationConfig:
    """Link parameters.

    Powers are normalised so that ``noise_density_ratio`` is the noise
    variance ``N0/T`` of one matched-filtered symbol-rate sample.  ``rho_p``
    is the pilot power to base-station noise ratio; when left as ``None`` it is
    set so that a cell-edge user's pilot arrives at 0 dB SNR, i.e.
    ``rho_p = (outer_radius/inner_radius)**alpha * N0/T``.  ``Np`` defaults
    to the orthogonality minimum ``K*L``.

    ``tap_model`` selects how the continuous-time channel is drawn:

    ``"oversampled"``
        i.i.d. taps ``h(l T/kappa) ~ CN(0, 1/(kappa L))`` for
        ``l = 0..kappa(L-1)``, turned into symbol-rate taps through the pulse
        autocorrelation.  The resulting symbol-rate taps have unequal powers
        and are mildly correlated across delay.
    ``"symbol"``
        i.i.d. taps ``CN(0, 1/L)`` placed on the symbol grid only, which makes
        the symbol-rate taps exactly i.i.d. (up to pulse truncation).

    ``fixed_beta`` places every user at the same path loss instead of
    dropping them on the annulus.
    """

    M: int = 32
    K: int = 4
    L: int = 4
    N: int = 64
    kappa: int = 7
    T: float = 1.0
    rolloff: float = 0.22
    half_span: int = 16
    P: float = 1.0
    noise_density_ratio: float = 1.0
    alpha: float = 3.8
    inner_radius: float = 1.0
    outer_radius: float = 100.0
    Np: int | None = None
    rho_p: float | None = None
    tap_model: str = "oversampled"
    fixed_beta: float | None = None
    constellation: str = "qpsk"
    blocks_per_drop: int = 1

    def __post_init__(self):
        if not self.M >= self.K >= 1:
            raise ValueError(f"need M >= K >= 1, got M={self.M}, K={self.K}")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.N <= self.L:
            raise ValueError(f"block length N={self.N} must exceed L={self.L}")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")
        if not self.outer_radius > self.inner_radius > 0:
            raise ValueError("need outer_radius > inner_radius > 0")
        if self.tap_model not in TAP_MODELS:
            raise ValueError(f"tap_model must be one of {TAP_MODELS}")
        if self.Np is not None and self.Np < self.K * self.L:
            raise ValueError(
                f"pilot length Np={self.Np} < K*L={self.K * self.L}: pilots cannot be orthogonal"
            )
        if self.blocks_per_drop < 1:
            raise ValueError("blocks_per_drop must be >= 1")

    @property
    def B(self):
        """Pulse bandwidth, ``B*T = 1 + rolloff``."""
        return (1.0 + self.rolloff) / self.T

    @property
    def pilot_length(self):
        return self.K * self.L if self.Np is None else self.Np

    @property
    def pilot_snr(self):
        if self.rho_p is not None:
            return self.rho_p
        return (self.outer_radius / self.inner_radius) ** self.alpha * self.noise_density_ratio

    @property
    def beta_min(self):
        return (self.inner_radius / self.outer_radius) ** self.alpha

    @property
    def n_oversampled_taps(self):
        return self.kappa * (self.L - 1) + 1

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """One small-scale fading draw plus the users' path losses.

    ``oversampled_taps`` is ``(K, M, kappa(L-1)+1)`` and holds the raw
    continuous-time tap gains; ``symbol_taps`` is ``(K, M, L)``.  The
    continuous-time channel that produces ``symbol_taps`` is
    ``tap_scale * oversampled_taps``.
    """

    oversampled_taps: np.ndarray
    symbol_taps: np.ndarray
    pathloss: np.ndarray
    tap_scale: float
    kappa: int


@dataclass(frozen=True)
class ChannelEstimate:
    """LMMSE estimate ``est_taps`` and error ``err_taps``, ``est + err = h``."""

    est_taps: np.ndarray
    err_taps: np.ndarray
    delta: np.ndarray
    err_var: np.ndarray


@lru_cache(maxsize=32)
def symbol_tap_response(rolloff, kappa, L, half_span, T=1.0, tap_model="oversampled"):
    """Map from oversampled taps to symbol-rate taps.

    Returns ``(R, scale)`` where ``R[l, j] = T * (p * p~)(lT - jT/kappa)`` for
    ``l < L`` and ``j <= kappa(L-1)``, computed from the sampled pulse, and
    ``scale`` renormalises the ensemble symbol-tap energy to one.
    """
    pulse = rrc_pulse(rolloff, kappa, half_span, T)
    acf = np.correlate(pulse, pulse, mode="full") * (T / kappa) * T
    centre = len(pulse) - 1
    n_os = kappa * (L - 1) + 1
    lag = kappa * np.arange(L)[:, None] - np.arange(n_os)[None, :]
    R = acf[centre + lag]
    if tap_model == "oversampled":
        tap_var = np.full(n_os, 1.0 / (kappa * L))
    else:
        tap_var = np.zeros(n_os)
        tap_var[::kappa] = 1.0 / L
    energy = np.sum(R**2 * tap_var[None, :])
    R.setflags(write=False)
    return R, 1.0 / np.sqrt(energy)


def _draw_fading(cfg, rng, shape_prefix):
    n_os = cfg.n_oversampled_taps
    if cfg.tap_model == "oversampled":
        taps = crandn(rng, shape_prefix + (n_os,), 1.0 / (cfg.kappa * cfg.L))
    else:
        taps = np.zeros(shape_prefix + (n_os,), dtype=complex)
        taps[..., :: cfg.kappa] = crandn(rng, shape_prefix + (cfg.L,), 1.0 / cfg.L)
    R, scale = symbol_tap_response(cfg.rolloff, cfg.kappa, cfg.L, cfg.half_span, cfg.T, cfg.tap_model)
    sym = scale * np.einsum("...j,lj->...l", taps, R)
    return taps, sym, scale


def draw_channel(cfg, seed=None, pathloss=None):
    """Draw a ``ChannelRealization``.

    ``pathloss`` overrides the path losses; otherwise they come from
    :func:`draw_pathloss` with the same generator.
    """
    rng = as_generator(seed)
    taps, sym, scale = _draw_fading(cfg, rng, (cfg.K, cfg.M))
    if pathloss is None:
        pathloss = draw_pathloss(cfg, rng)
    pathloss = np.asarray(pathloss, dtype=float)
    return ChannelRealization(taps, sym, pathloss, float(scale), cfg.kappa)


def draw_user_distances(cfg, seed=None, size=None):
    """User distances uniform by area over the annulus."""
    rng = as_generator(seed)
    size = cfg.K if size is None else size
    r2 = rng.uniform(cfg.inner_radius**2, cfg.outer_radius**2, size=size)
    return np.sqrt(r2)


def pathloss_from_distance(cfg, d):
    return (cfg.inner_radius / np.asarray(d, dtype=float)) ** cfg.alpha


def draw_pathloss(cfg, seed=None):
    """Per-user path loss ``beta_k = (r/d_k)**alpha`` (or ``fixed_beta``)."""
    if cfg.fixed_beta is not None:
        return np.full(cfg.K, float(cfg.fixed_beta))
    return pathloss_from_distance(cfg, draw_user_distances(cfg, seed))


def lmmse_variances(cfg, pathloss):
    """Estimate and error variances ``(delta_k, E_k)`` for i.i.d. fading."""
    x = cfg.pilot_length * cfg.pilot_snr * np.asarray(pathloss, dtype=float)
    return x / (1.0 + x), 1.0 / (1.0 + x)


def estimate_channel(ch, cfg, seed=None):
    """Synthesize an LMMSE channel estimate with the second-order statistics of pilot training.

    The estimate is ``c (h + w)`` with ``c = x/(1+x)``, ``x = Np rho_p beta_k``,
    and ``w`` an independent channel-shaped draw scaled by ``1/sqrt(x)``.
    Because ``w`` shares the covariance of ``h``, the estimate and the error
    are uncorrelated for either tap model and carry total variances
    ``delta_k`` and ``E_k``.
    """
    if cfg.pilot_length < cfg.K * cfg.L:
        raise ValueError("pilot length below K*L violates pilot orthogonality")
    rng = as_generator(seed)
    _, w, _ = _draw_fading(cfg, rng, (cfg.K, cfg.M))
    x = cfg.pilot_length * cfg.pilot_snr * ch.pathloss
    c = (x / (1.0 + x))[:, None, None]
    wscale = (np.sqrt(x) / (1.0 + x))[:, None, None]
    est = c * ch.symbol_taps + wscale * w
    err = ch.symbol_taps - est
    delta, err_var = lmmse_variances(cfg, ch.pathloss)
    return ChannelEstimate(est, err, delta, err_var)


def channel_dft(taps, N):
    """Per-tone channel matrices ``H[v] = sum_l exp(-j 2 pi l v / N) H[l]``.

    ``taps`` is ``(..., K, M, L)``; the result is ``(..., N, K, M)``.
    """
    taps = np.asarray(taps)
    if taps.shape[-1] > N:
        raise ValueError("more taps than the block length")
    Hf = np.fft.fft(taps, n=N, axis=-1)
    return np.moveaxis(Hf, -1, -3)
