"""Distortion decomposition, SINR and rate bounds, PSD and ACLR.

The decomposition works on four aligned streams per user, all in the
detection domain: the desired symbols ``s``, the estimate-filtered signal
``r``, the error-filtered signal ``e`` and the in-band distortion ``d``.
Everything needed is a second moment of those streams, so the estimator keeps
one 4x4 Gram matrix per user and trial and merges trials by summation.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .chain import simulate_block
from .precoder import PrecoderSpec

__all__ = [
    "InsufficientSamplesError",
    "DistortionDecomposition",
    "LinkMetrics",
    "GramAccumulator",
    "decompose",
    "sinr",
    "rate",
    "link_metrics",
    "welch_nperseg",
    "psd",
    "band_powers",
    "aclr",
    "sc_ofdm_equivalence_check",
    "write_psd_csv",
    "write_decomposition_csv",
]

S, R, E_, D_ = range(4)


class InsufficientSamplesError(ValueError):
    pass


@dataclass
class DistortionDecomposition:
    """Per-user constants of the received-signal decomposition.

    ``g``, ``c`` and ``rho`` are complex; ``I``, ``E`` and ``D`` are
    variances.  ``se`` maps each field name to its standard error estimated
    from the spread across trials.
    """

    g: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    I: np.ndarray
    E: np.ndarray
    D: np.ndarray
    delta: np.ndarray
    xi: np.ndarray
    n_samples: int
    n_trials: int
    se: dict = field(default_factory=dict)

    @property
    def g2(self):
        return np.abs(self.g) ** 2

    @property
    def clip_power(self):
        """``a_k = |g + c|^2 / |g|^2`` (linear)."""
        return np.abs(self.g + self.c) ** 2 / self.g2

    @property
    def clip_power_db(self):
        return 10.0 * np.log10(self.clip_power)

    @property
    def clip_power_db_se(self):
        return 10.0 / np.log(10.0) * self.se["clip"] / self.clip_power

    @property
    def sigma2_se(self):
        return self.se["D_over_g2"] / self.xi

    @property
    def sigma2(self):
        """In-band distortion variance relative to the desired signal, ``D/(xi |g|^2)``."""
        return self.D / (self.xi * self.g2)


@dataclass
class LinkMetrics:
    sinr: np.ndarray
    rate: np.ndarray
    sigma2: np.ndarray
    clip_power_db: np.ndarray

    @property
    def sum_rate(self):
        return float(np.sum(self.rate))


def _inner(G, a, b):
    return np.einsum("...a,...ab,...b->...", np.conj(a), G, b)


def _quantities(G, delta):
    """Decomposition constants from mean Gram matrices ``G[..., k, a, b] = E[v_a^* v_b]``."""
    Gss = G[..., S, S].real
    sqd = np.sqrt(delta)
    a = G[..., S, R] / Gss
    g = a / sqd
    I = np.maximum(G[..., R, R].real - np.abs(G[..., S, R]) ** 2 / Gss, 0.0)
    E = G[..., E_, E_].real
    b = G[..., S, D_] / Gss
    c = b / sqd
    one = np.ones_like(a)
    zero = np.zeros_like(a)
    q = np.stack([-a, one, one, zero], axis=-1)
    dvec = np.stack([zero, zero, zero, one], axis=-1)
    svec = np.stack([one, zero, zero, zero], axis=-1)
    IE = I + E
    rho = np.where(IE > 0, _inner(G, q, dvec) / np.where(IE > 0, IE, 1.0), 0.0)
    dprime = dvec - b[..., None] * svec - rho[..., None] * q
    D = np.maximum(_inner(G, dprime, dprime).real, 0.0)
    g2 = np.abs(g) ** 2
    clip = np.abs(G[..., S, R] + G[..., S, D_]) ** 2 / np.abs(G[..., S, R]) ** 2
    return {"g": g, "c": c, "rho": rho, "I": I, "E": E, "D": D, "g2": g2,
            "clip": clip, "D_over_g2": D / g2}


class GramAccumulator:
    """Per-trial second-moment accumulator; merging is order independent.

    Trials are keyed by an integer id.  Totals are formed by summing in id
    order, so any partition of the same trial ids merges to identical
    numbers.
    """

    def __init__(self, K):
        self.K = K
        self._grams = {}
        self._counts = {}

    def add(self, trial, s, r, e, d=None):
        if trial in self._grams:
            raise KeyError(f"trial {trial} already accumulated")
        if d is None:
            d = np.zeros_like(r)
        v = np.stack([s, r, e, d], axis=1)  # (K, 4, n)
        self._grams[trial] = np.einsum("kan,kbn->kab", np.conj(v), v)
        self._counts[trial] = v.shape[-1]

    def merge(self, other):
        if other.K != self.K:
            raise ValueError("accumulators disagree on K")
        clash = set(self._grams) & set(other._grams)
        if clash:
            raise KeyError(f"trials accumulated twice: {sorted(clash)[:5]}")
        out = GramAccumulator(self.K)
        out._grams = {**self._grams, **other._grams}
        out._counts = {**self._counts, **other._counts}
        return out

    @property
    def trials(self):
        return sorted(self._grams)

    @property
    def n_samples(self):
        return int(sum(self._counts.values()))

    def mean_gram(self):
        ids = self.trials
        total = np.zeros((self.K, 4, 4), dtype=complex)
        for t in ids:
            total = total + self._grams[t]
        return total / self.n_samples

    def finalize(self, delta, xi, strict=True):
        """Decomposition with standard errors from the trial-to-trial spread."""
        ids = self.trials
        if len(ids) < 2:
            raise InsufficientSamplesError("need at least two trials for standard errors")
        delta = np.asarray(delta, dtype=float)
        xi = np.asarray(xi, dtype=float)
        q = _quantities(self.mean_gram(), delta)
        per = _quantities(
            np.stack([self._grams[t] / self._counts[t] for t in ids]), delta[None, :]
        )
        n = len(ids)
        se = {}
        for key, vals in per.items():
            if np.iscomplexobj(vals):
                spread = np.sqrt(np.var(vals.real, axis=0, ddof=1) + np.var(vals.imag, axis=0, ddof=1))
            else:
                spread = np.std(vals, axis=0, ddof=1)
            se[key] = spread / np.sqrt(n)
        if strict:
            gmag = np.abs(q["g"])
            rel = np.where(gmag > 0, np.abs(se["g"]) / np.where(gmag > 0, gmag, 1.0), np.inf)
            if np.any(rel > 0.01):
                raise InsufficientSamplesError(
                    f"standard error of g is {np.max(rel):.2%} of its value (limit 1%)"
                )
        return DistortionDecomposition(
            g=q["g"], c=q["c"], rho=q["rho"], I=q["I"], E=q["E"], D=q["D"],
            delta=delta, xi=xi, n_samples=self.n_samples, n_trials=n, se=se,
        )


def decompose(s, r, e, d, delta, xi=None, strict=True):
    """Estimate the decomposition from stacked streams.

    Parameters
    ----------
    s, r, e, d : ndarray, (trials, K, n)
        Desired symbols, estimate-filtered signal, error-filtered signal and
        in-band distortion.  ``d`` may be ``None`` for a linear amplifier.
    delta : ndarray, (K,)
        Channel estimate variances.
    xi : ndarray, (K,), optional
        Power allocation; defaults to the sample power of ``s``.
    """
    s = np.asarray(s)
    if s.ndim == 2:
        s, r, e = s[None], np.asarray(r)[None], np.asarray(e)[None]
        d = None if d is None else np.asarray(d)[None]
    acc = GramAccumulator(s.shape[1])
    for t in range(s.shape[0]):
        acc.add(t, s[t], r[t], e[t], None if d is None else d[t])
    if xi is None:
        xi = np.mean(np.abs(s) ** 2, axis=(0, 2))
    return acc.finalize(delta, xi, strict=strict)


def sinr(dec, P, beta, xi=None, delta=None, N0_over_T=1.0):
    """Signal-to-interference-noise-and-distortion ratio per user.

    ``delta*xi*P*beta*|g+c|^2 / (P*beta*((I+E)|1+rho|^2 + D) + N0/T)``.
    ``xi`` and ``delta`` default to the values stored in ``dec``.
    """
    xi = dec.xi if xi is None else np.asarray(xi, dtype=float)
    delta = dec.delta if delta is None else np.asarray(delta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    num = delta * xi * P * beta * np.abs(dec.g + dec.c) ** 2
    den = P * beta * ((dec.I + dec.E) * np.abs(1.0 + dec.rho) ** 2 + dec.D) + N0_over_T
    return num / den


def rate(sinr_values):
    """Per-user rates ``log2(1 + SINR)`` and their sum."""
    rk = np.log2(1.0 + np.asarray(sinr_values, dtype=float))
    return rk, float(np.sum(rk))


def link_metrics(dec, P, beta, N0_over_T=1.0):
    sk = sinr(dec, P, beta, N0_over_T=N0_over_T)
    rk, _ = rate(sk)
    return LinkMetrics(sk, rk, dec.sigma2, dec.clip_power_db)


# --------------------------------------------------------------------------
# Spectra


def welch_nperseg(fs, resolution):
    """Smallest power-of-two Hann segment whose noise bandwidth is within ``resolution``."""
    n = int(np.ceil(1.5 * fs / resolution))
    return 1 << (n - 1).bit_length()


def psd(signals, fs, resolution=None, nperseg=None):
    """Averaged-periodogram PSD (Hann window, 50% overlap).

    ``signals`` is ``(..., samples)``; the estimate is averaged over all
    leading axes.  Returns ``(f, S)`` with ``f`` ascending over
    ``[-fs/2, fs/2)``.
    """
    x = np.asarray(signals)
    if nperseg is None:
        if resolution is None:
            raise ValueError("give resolution or nperseg")
        nperseg = welch_nperseg(fs, resolution)
    if x.shape[-1] < nperseg:
        raise ValueError(
            f"{x.shape[-1]} samples cannot reach the requested resolution (segment {nperseg})"
        )
    f, S = sps.welch(
        x.reshape(-1, x.shape[-1]), fs=fs, window="hann", nperseg=nperseg,
        noverlap=nperseg // 2, return_onesided=False, detrend=False, axis=-1,
    )
    S = S.mean(axis=0)
    return np.fft.fftshift(f), np.fft.fftshift(S)


def band_powers(f, S, B):
    """Powers in ``[-3B/2, -B/2)``, ``[-B/2, B/2]`` and ``(B/2, 3B/2]``."""
    f = np.asarray(f)
    df = np.mean(np.diff(f))
    lo = (f >= -1.5 * B) & (f < -0.5 * B)
    mid = np.abs(f) <= 0.5 * B
    hi = (f > 0.5 * B) & (f <= 1.5 * B)
    return S[..., lo].sum(-1) * df, S[..., mid].sum(-1) * df, S[..., hi].sum(-1) * df


def aclr(f, S, B):
    """Adjacent channel leakage ratio (linear): worse adjacent band over the useful band."""
    fmax = np.max(np.abs(f))
    if fmax < 1.5 * B:
        raise ValueError("spectrum does not cover the adjacent bands")
    p_lo, p_in, p_hi = band_powers(f, S, B)
    return np.maximum(p_lo, p_hi) / p_in


# --------------------------------------------------------------------------
# Single carrier versus OFDM


def sc_ofdm_equivalence_check(cfg, scheme="ZF", trials=200, seed=0, theta=None):
    """Paired Monte Carlo estimate of ``|g_k|^2`` and ``I_k`` for both transmissions.

    The two chains share channel, estimate and symbol draws trial by trial;
    the amplifier is linear.  ``passed`` is True when, for every user, the two
    estimates of each quantity lie within three combined standard errors.
    """
    out = {}
    for tx in ("sc", "ofdm"):
        kw = {"transmission": tx, "scheme": scheme}
        if scheme == "RZF":
            kw["rzf_rho"] = 1.0 if theta is None else theta
        if scheme == "DTCE":
            kw["dtce_gamma"] = float(cfg.M - cfg.K) / 2 if theta is None else theta
        spec = PrecoderSpec(**kw)
        acc = GramAccumulator(cfg.K)
        delta = None
        for t in range(trials):
            b = simulate_block(cfg, spec, seed, t)
            acc.add(t, b.s, b.r, b.e)
            delta = b.delta if delta is None else delta
        if cfg.fixed_beta is None and cfg.blocks_per_drop < trials:
            raise ValueError("the equivalence check needs fixed path losses (fixed_beta)")
        out[tx] = acc.finalize(delta, np.full(cfg.K, 1.0 / cfg.K), strict=False)
    sc, of = out["sc"], out["ofdm"]
    rows = {}
    passed = True
    for key in ("g2", "I"):
        a = sc.g2 if key == "g2" else sc.I
        b = of.g2 if key == "g2" else of.I
        sa, sb = sc.se[key], of.se[key]
        comb = np.sqrt(sa**2 + sb**2)
        ok = np.abs(a - b) <= 3 * comb + 1e-12 * np.maximum(np.abs(a), 1.0)
        passed &= bool(np.all(ok))
        rows[key] = {"sc": a, "sc_se": sa, "ofdm": b, "ofdm_se": sb, "ok": ok}
    return {"scheme": scheme, "passed": passed, "stats": rows, "sc": sc, "ofdm": of}


def write_psd_csv(path, f_over_B, dbc_per_hz):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_over_B", "dbc_per_hz"])
        for a, b in zip(f_over_B, dbc_per_hz):
            w.writerow([repr(float(a)), repr(float(b))])


def write_decomposition_csv(path, rows):
    """Rows of ``(scheme, backoff, user, DistortionDecomposition)``."""
    cols = ["scheme", "backoff", "user", "g2", "c", "rho", "I", "E", "D",
            "g2_se", "c_se", "rho_se", "I_se", "E_se", "D_se"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for scheme, backoff, dec in rows:
            for k in range(len(dec.g)):
                w.writerow([
                    scheme, repr(float(backoff)), k,
                    repr(float(dec.g2[k])), _cfmt(dec.c[k]), _cfmt(dec.rho[k]),
                    repr(float(dec.I[k])), repr(float(dec.E[k])), repr(float(dec.D[k])),
                    *(repr(float(np.abs(dec.se[key][k]))) for key in ("g2", "c", "rho", "I", "E", "D")),
                ])


def _cfmt(z):
    z = complex(z)
    return f"{z.real!r}{z.imag:+.17g}j"


