"""Rapp power amplifier, backoff, radiated-power calibration and class-B efficiency."""

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "RappAmplifier",
    "one_db_compression_input",
    "rapp_gain",
    "am_am",
    "amplify",
    "radiated_power",
    "calibrate_lambda0",
    "efficiency",
    "CalibrationError",
]


class CalibrationError(RuntimeError):
    pass


def one_db_compression_input(p):
    """Input amplitude ratio ``u_1dB / u_max`` of a Rapp curve with smoothness ``p``.

    Solves ``(1 + x**(2p))**(-1/(2p)) = 10**(-1/20)``.
    """
    if p <= 0:
        raise ValueError("p must be > 0")
    return (10.0 ** (p / 10.0) - 1.0) ** (1.0 / (2.0 * p))


def rapp_gain(x, p):
    """Normalised Rapp curve ``x / (1 + x**(2p))**(1/(2p))`` (unit knee and saturation)."""
    x = np.asarray(x, dtype=float)
    # written via the larger of 1 and x**(2p) to stay finite for huge inputs
    with np.errstate(over="ignore"):
        x2p = x ** (2.0 * p)
    big = x2p > 1e200
    out = np.empty_like(x)
    out[~big] = x[~big] / (1.0 + x2p[~big]) ** (1.0 / (2.0 * p))
    out[big] = 1.0
    return out


@dataclass(frozen=True)
class RappAmplifier:
    """Memoryless Rapp amplifier driven by the signal of one of ``M`` antennas.

    ``u_max = 1/sqrt(M)`` is the knee and ``A_max = u_max * sqrt(P) / lambda0``
    the saturation amplitude.  The antenna signal is scaled by
    ``1/sqrt(b)`` before the AM-AM curve, where ``b`` is chosen so that a
    signal with the nominal RMS amplitude ``1/sqrt(M)`` sits ``backoff_db``
    below the 1-dB compression input.  ``lambda0`` defaults to
    ``1/sqrt(b)``, the value that radiates ``P`` for a perfectly linear
    amplifier; use :func:`calibrate_lambda0` to account for clipping.
    """

    M: int
    p: float = 2.0
    backoff_db: float = 0.0
    P: float = 1.0
    lambda0: float | None = None

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.p <= 0:
            raise ValueError("p must be > 0")
        if self.lambda0 is not None and self.lambda0 <= 0:
            raise ValueError("lambda0 must be > 0")

    @property
    def u_max(self):
        return 1.0 / np.sqrt(self.M)

    @property
    def input_scale(self):
        """``1/sqrt(b)``."""
        return one_db_compression_input(self.p) * 10.0 ** (-self.backoff_db / 20.0)

    @property
    def b(self):
        return self.input_scale**-2

    @property
    def lam(self):
        return self.input_scale if self.lambda0 is None else self.lambda0

    @property
    def A_max(self):
        return self.u_max * np.sqrt(self.P) / self.lam

    def with_(self, **changes):
        return replace(self, **changes)


def am_am(u, amp):
    """Output amplitude ``g(u)`` for input amplitude ``u >= 0`` (already backed off)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("amplitudes must be non-negative")
    return amp.A_max * rapp_gain(u / amp.u_max, amp.p)


def amplify(signal, amp):
    """Complex amplifier output ``g(|u|/sqrt(b)) exp(j arg u)``; AM-PM is zero."""
    signal = np.asarray(signal)
    mag = np.abs(signal)
    out_mag = amp.A_max * rapp_gain(mag * amp.input_scale / amp.u_max, amp.p)
    phase = np.divide(signal, mag, out=np.ones_like(signal, dtype=complex), where=mag > 0)
    return out_mag * phase


def radiated_power(signals, amp):
    """Time-average total output power over ``M`` antennas.

    ``signals`` is ``(..., M, samples)`` or any array whose per-sample mean
    represents one antenna; the total is ``M`` times the per-antenna mean.
    """
    x = amplify(signals, amp)
    return amp.M * float(np.mean(np.abs(x) ** 2))


def calibrate_lambda0(signals, amp, P=None, tol=1e-4, max_iter=100, damping=0.7):
    """Clipping-loss correction ``lambda0`` so the radiated power equals ``P``.

    Damped fixed-point iteration on the measured output power,
    ``lambda <- lambda * (P_meas/P)**(damping/2)``, starting from the
    linear-regime value.  ``P`` is the target power and defaults to the
    amplifier's ``P``; the amplifier keeps its own ``P`` in ``A_max``.
    Returns the calibrated value; the iteration stops once the power is
    within ``tol`` (relative) of the target.
    """
    P = amp.P if P is None else P
    signals = np.asarray(signals)
    if not np.any(signals):
        raise CalibrationError("cannot calibrate on an all-zero ensemble")
    lam = amp.input_scale
    for _ in range(max_iter):
        trial = amp.with_(lambda0=lam)
        p_meas = radiated_power(signals, trial)
        if abs(p_meas / P - 1.0) <= tol:
            return lam
        lam *= (p_meas / P) ** (damping / 2.0)
    raise CalibrationError(f"lambda0 did not converge in {max_iter} iterations")


def efficiency(amp, signals):
    """Class-B efficiency ``(pi/4) E[g^2] / (A_max E[g])`` over the ensemble.

    An all-zero ensemble gives 0.
    """
    mag = np.abs(np.asarray(signals)).ravel()
    g = rapp_gain(mag * amp.input_scale / amp.u_max, amp.p)
    mean_g = g.mean()
    if mean_g == 0:
        return 0.0
    return float(np.pi / 4.0 * np.mean(g**2) / mean_g)
