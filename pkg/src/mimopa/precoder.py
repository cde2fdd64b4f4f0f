"""Linear (MR, ZF, RZF) and discrete-time constant-envelope precoding.

Shapes used throughout: per-tone channel estimates ``(N, K, M)``, per-tone
weights ``(N, M, K)``, symbols ``(K, N)`` and antenna signals ``(M, N)``.

Transform conventions.  Single-carrier transmission filters the symbol
stream cyclically with ``W[l] = (1/N) sum_v exp(j 2 pi v l / N) W~[v]``;
OFDM maps tone symbols through ``u = sqrt(N) * ifft(W~ s)``.  With these
scalings both produce the same average antenna power, ``mean_v sum_k xi_k
||w~_k[v]||^2``, which the normalisation constant sets to one.
"""

from dataclasses import dataclass

import numba
import numpy as np

from .waveform import unitary_idft

__all__ = [
    "SCHEMES",
    "TRANSMISSIONS",
    "DegenerateChannelError",
    "PrecoderSpec",
    "PrecoderWeights",
    "mr_weights",
    "zf_weights",
    "rzf_weights",
    "linear_weights",
    "normalization_constant",
    "precode_linear",
    "DTCEResult",
    "dtce_target",
    "dtce_objective",
    "dtce_precode",
    "zf_tap_profile",
]

SCHEMES = ("MR", "ZF", "RZF", "DTCE")
TRANSMISSIONS = ("sc", "ofdm")


class DegenerateChannelError(ValueError):
    """Raised when a channel Gram matrix is numerically singular."""


@dataclass(frozen=True)
class PrecoderSpec:
    scheme: str = "ZF"
    rzf_rho: float = 0.0
    dtce_gamma: float = 1.0
    transmission: str = "sc"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.transmission not in TRANSMISSIONS:
            raise ValueError(f"transmission must be one of {TRANSMISSIONS}")
        if self.rzf_rho < 0:
            raise ValueError("rzf_rho must be >= 0")
        if self.dtce_gamma <= 0:
            raise ValueError("dtce_gamma must be > 0")

    @property
    def theta(self):
        if self.scheme == "RZF":
            return self.rzf_rho
        if self.scheme == "DTCE":
            return self.dtce_gamma
        return None


@dataclass(frozen=True)
class PrecoderWeights:
    freq_weights: np.ndarray
    norm_const: float = 1.0

    @property
    def N(self):
        return self.freq_weights.shape[-3]

    @property
    def time_taps(self):
        """Cyclic impulse response ``W[l]``, ``(N, M, K)``; negative delays wrap to the end."""
        return np.fft.ifft(self.freq_weights, axis=-3)

    def scaled(self, alpha):
        return PrecoderWeights(self.freq_weights * alpha, self.norm_const * alpha)


def mr_weights(Hf, alpha=1.0):
    """Maximum-ratio weights ``alpha * H^H`` per tone."""
    return PrecoderWeights(alpha * np.conj(np.swapaxes(Hf, -1, -2)), alpha)


def _check_gram(G, cond_limit):
    c = np.linalg.cond(G)
    if not np.all(np.isfinite(c)) or np.any(c > cond_limit):
        raise DegenerateChannelError(
            f"channel Gram matrix is singular (condition number {np.max(c):.3g})"
        )


def zf_weights(Hf, alpha=1.0, cond_limit=1e12):
    """Zero-forcing weights ``alpha * H^H (H H^H)^-1`` per tone."""
    Hh = np.conj(np.swapaxes(Hf, -1, -2))
    G = Hf @ Hh
    _check_gram(G, cond_limit)
    return PrecoderWeights(alpha * Hh @ np.linalg.inv(G), alpha)


def rzf_weights(Hf, rho, alpha=1.0, cond_limit=1e12):
    """Regularised zero-forcing ``alpha * H^H (H H^H + rho I)^-1``.

    ``rho = 0`` is plain zero forcing and inherits its invertibility check.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if rho == 0:
        return zf_weights(Hf, alpha, cond_limit)
    K = Hf.shape[-2]
    Hh = np.conj(np.swapaxes(Hf, -1, -2))
    G = Hf @ Hh + rho * np.eye(K)
    return PrecoderWeights(alpha * Hh @ np.linalg.inv(G), alpha)


def linear_weights(Hf, spec, alpha=1.0):
    if spec.scheme == "MR":
        return mr_weights(Hf, alpha)
    if spec.scheme == "ZF":
        return zf_weights(Hf, alpha)
    if spec.scheme == "RZF":
        return rzf_weights(Hf, spec.rzf_rho, alpha)
    raise ValueError(f"{spec.scheme} is not a linear scheme")


def normalization_constant(weight_ensemble, power_alloc):
    """Ensemble normalisation ``alpha`` making the mean antenna power one.

    ``weight_ensemble`` is an iterable of unnormalised ``(N, M, K)`` weight
    arrays (one per channel realisation).  Returns
    ``1/sqrt(E[mean_v sum_k xi_k ||w~_k[v]||^2])``.
    """
    xi = np.asarray(power_alloc, dtype=float)
    acc = 0.0
    n = 0
    for W in weight_ensemble:
        acc += np.mean(np.sum(np.abs(W) ** 2, axis=-2) @ xi)
        n += 1
    if n == 0 or acc <= 0:
        raise ValueError("empty or zero-power weight ensemble")
    return 1.0 / np.sqrt(acc / n)


def precode_linear(weights, symbols, transmission="sc"):
    """Antenna signals ``(M, N)`` from symbols ``(K, N)``.

    For ``"sc"`` the symbols are a time sequence filtered cyclically by
    ``W[l]``; for ``"ofdm"`` they sit on tones and the per-tone products are
    brought to time by a unitary inverse DFT.
    """
    W = weights.freq_weights
    symbols = np.asarray(symbols)
    if symbols.ndim != 2 or W.shape[0] != symbols.shape[1] or W.shape[2] != symbols.shape[0]:
        raise ValueError(
            f"symbols {symbols.shape} do not match weights (N, M, K) = {W.shape}"
        )
    if transmission == "sc":
        S = np.fft.fft(symbols, axis=-1)
        return np.fft.ifft(np.einsum("nmk,kn->mn", W, S), axis=-1)
    if transmission == "ofdm":
        return unitary_idft(np.einsum("nmk,kn->mn", W, symbols), axis=-1)
    raise ValueError(f"transmission must be one of {TRANSMISSIONS}")


def zf_tap_profile(Hf):
    """Normalised energy of the single-carrier ZF filter taps per delay.

    Returns ``(delays, energy)`` with delays ``-N/2 .. N/2-1`` and energy
    summed over antennas and users, normalised to sum to one.
    """
    taps = zf_weights(Hf).time_taps
    e = np.sum(np.abs(taps) ** 2, axis=(-1, -2))
    if e.ndim > 1:
        e = e.reshape(-1, e.shape[-1]).mean(axis=0)
    N = e.shape[-1]
    e = np.fft.fftshift(e)
    delays = np.arange(N) - N // 2
    return delays, e / e.sum()


# --------------------------------------------------------------------------
# Discrete-time constant envelope


@dataclass
class DTCEResult:
    u: np.ndarray
    objective_trace: np.ndarray
    converged: bool
    sweeps: int
    updates: int


def dtce_target(symbols, gamma, transmission="sc"):
    """Time-domain target ``sqrt(gamma) s`` (OFDM: unitary IDFT of the tone symbols)."""
    symbols = np.asarray(symbols)
    if transmission == "ofdm":
        symbols = unitary_idft(symbols, axis=-1)
    elif transmission != "sc":
        raise ValueError(f"transmission must be one of {TRANSMISSIONS}")
    return np.sqrt(gamma) * symbols


def dtce_objective(taps, u, target):
    """``sum_n || sum_l H[l] u[n-l] - target[n] ||^2`` with cyclic indices.

    ``taps`` is ``(K, M, L)``.
    """
    N = u.shape[-1]
    rx = np.fft.ifft(
        np.einsum("kmn,mn->kn", np.fft.fft(taps, n=N, axis=-1), np.fft.fft(u, axis=-1)), axis=-1
    )
    return float(np.sum(np.abs(rx - target) ** 2))


@numba.njit(cache=True)
def _dtce_kernel(H, target, u, amp, max_sweeps, tol, max_updates):
    # H: (L, K, M); target: (K, N); u: (M, N), updated in place.
    L, K, M = H.shape
    N = target.shape[1]
    res = -target.copy()
    for n in range(N):
        for ell in range(L):
            nn = (n + ell) % N
            for m in range(M):
                um = u[m, n]
                for k in range(K):
                    res[k, nn] += H[ell, k, m] * um
    obj = 0.0
    for k in range(K):
        for n in range(N):
            obj += res[k, n].real ** 2 + res[k, n].imag ** 2
    trace = np.empty(max_sweeps + 1)
    trace[0] = obj
    sweeps = 0
    updates = 0
    converged = False
    stop = False
    for sweep in range(max_sweeps):
        for n in range(N):
            for m in range(M):
                if max_updates >= 0 and updates >= max_updates:
                    stop = True
                    break
                old = u[m, n]
                # correlation of the residual with this coordinate's channel,
                # with the coordinate's own contribution removed
                c = 0.0j
                hnorm = 0.0
                for ell in range(L):
                    nn = (n + ell) % N
                    for k in range(K):
                        h = H[ell, k, m]
                        c += np.conj(h) * (res[k, nn] - h * old)
                        hnorm += h.real ** 2 + h.imag ** 2
                ac = abs(c)
                if ac > 0.0:
                    new = -amp * c / ac
                else:
                    new = old
                d = new - old
                if d != 0.0:
                    for ell in range(L):
                        nn = (n + ell) % N
                        for k in range(K):
                            res[k, nn] += H[ell, k, m] * d
                    u[m, n] = new
                updates += 1
            if stop:
                break
        if stop:
            break
        obj_new = 0.0
        for k in range(K):
            for n in range(N):
                obj_new += res[k, n].real ** 2 + res[k, n].imag ** 2
        sweeps += 1
        trace[sweeps] = obj_new
        if obj <= 0.0 or (obj - obj_new) <= tol * obj:
            converged = True
            obj = obj_new
            break
        obj = obj_new
    return trace[: sweeps + 1], sweeps, updates, converged


def _mr_phase_init(taps, target, amp):
    N = target.shape[-1]
    Hf = np.fft.fft(taps, n=N, axis=-1)
    u0 = np.fft.ifft(np.einsum("kmn,kn->mn", np.conj(Hf), np.fft.fft(target, axis=-1)), axis=-1)
    mag = np.abs(u0)
    phase = np.where(mag > 0, u0 / np.where(mag > 0, mag, 1.0), 1.0)
    return amp * phase


def dtce_precode(
    taps,
    symbols,
    gamma,
    transmission="sc",
    max_sweeps=50,
    tol=1e-5,
    init=None,
    max_updates=None,
):
    """Constant-envelope precoding by cyclic coordinate descent.

    Minimises ``sum_n || sum_l H[l] u[n-l] - sqrt(gamma) s[n] ||^2`` over
    ``|u_m[n]| = 1/sqrt(M)``.  Each update sets one ``u_m[n]`` to its exact
    minimiser with the others fixed, sweeping ``n`` then ``m``; the objective
    therefore never increases.  Sweeps stop when the relative decrease over a
    sweep drops below ``tol`` or after ``max_sweeps``.

    Parameters
    ----------
    taps : ndarray, (K, M, L)
        Channel estimate taps.
    symbols : ndarray, (K, N)
        Time symbols (single carrier) or tone symbols (OFDM).
    gamma : float
        Target gain.
    init : ndarray, (M, N), optional
        Starting point; its phases are used.  Defaults to the phases of the
        maximum-ratio precoded target.
    max_updates : int, optional
        Stop after this many coordinate updates (for inspection).

    Returns
    -------
    DTCEResult
        ``objective_trace`` holds the objective at the start and after every
        completed sweep.  ``converged`` is False when the sweep budget ran out
        first; ``u`` is then the last (and best) iterate.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    taps = np.asarray(taps, dtype=np.complex128)
    K, M, L = taps.shape
    target = dtce_target(symbols, gamma, transmission).astype(np.complex128)
    if target.shape[0] != K:
        raise ValueError("symbols and taps disagree on the number of users")
    N = target.shape[1]
    if N < L:
        raise ValueError("block shorter than the channel")
    amp = 1.0 / np.sqrt(M)
    if init is None:
        u = _mr_phase_init(taps, target, amp)
    else:
        init = np.asarray(init, dtype=np.complex128)
        mag = np.abs(init)
        u = amp * np.where(mag > 0, init / np.where(mag > 0, mag, 1.0), 1.0)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    H = np.ascontiguousarray(np.transpose(taps, (2, 0, 1)))
    trace, sweeps, updates, converged = _dtce_kernel(
        H, np.ascontiguousarray(target), u, amp, int(max_sweeps), float(tol),
        -1 if max_updates is None else int(max_updates),
    )
    return DTCEResult(u, np.asarray(trace), bool(converged), int(sweeps), int(updates))
