"""Max-min SINR power allocation with a linear in-band distortion model.

The distortion of user ``k`` is modelled as ``D_k = D' + delta_k xi_k D''``.
At the max-min optimum every user sees the same SINR; the allocation then
follows by inverting the SINR expression for ``xi_k``.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "AllocationModel",
    "InfeasibleAllocationError",
    "fit_distortion_model",
    "solve_common_sinr",
    "closed_form_common_sinr",
    "allocate",
    "closed_form_allocation",
    "mr_allocation",
    "zf_allocation",
    "achieved_sinr",
    "write_allocation_csv",
]


class InfeasibleAllocationError(ValueError):
    pass


@dataclass
class AllocationModel:
    """Per-user link constants plus the distortion line ``(Dprime, Dsecond)``.

    ``g``, ``c`` and ``rho`` may be complex.  ``P`` is the radiated power and
    ``N0_over_T`` the receiver noise variance.
    """

    beta: np.ndarray
    delta: np.ndarray
    g: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    I: np.ndarray
    E: np.ndarray
    Dprime: float = 0.0
    Dsecond: float = 0.0
    P: float = 1.0
    N0_over_T: float = 1.0

    def __post_init__(self):
        K = np.size(self.beta)
        for name in ("beta", "delta", "g", "c", "rho", "I", "E"):
            v = np.asarray(getattr(self, name))
            v = np.broadcast_to(v, (K,)).copy()
            setattr(self, name, v)
        if self.Dprime < 0 or self.Dsecond < 0:
            raise ValueError("distortion constants must be non-negative")
        if np.any(self.beta <= 0) or np.any(self.delta <= 0):
            raise ValueError("beta and delta must be positive")

    @property
    def K(self):
        return self.beta.size

    @property
    def gain(self):
        """``|g_k + c_k|^2``."""
        return np.abs(self.g + self.c) ** 2

    def with_(self, **changes):
        return replace(self, **changes)

    def _impairment(self):
        """``P beta_k ((I_k+E_k)|1+rho_k|^2 + D') + N0/T``."""
        return (
            self.P * self.beta * ((self.I + self.E) * np.abs(1.0 + self.rho) ** 2 + self.Dprime)
            + self.N0_over_T
        )


def fit_distortion_model(x, D):
    """Least-squares line ``D = D' + D'' x`` with both constants clamped at zero.

    ``x`` holds the abscissae ``delta_k xi_k``.  If the unconstrained fit has a
    negative coefficient, that coefficient is fixed at zero and the other is
    refitted.
    """
    x = np.asarray(x, dtype=float).ravel()
    D = np.asarray(D, dtype=float).ravel()
    if x.shape != D.shape:
        raise ValueError("x and D must have the same length")
    if np.unique(x).size < 2:
        raise ValueError("need at least two distinct abscissae")
    A = np.column_stack([np.ones_like(x), x])
    (d1, d2), *_ = np.linalg.lstsq(A, D, rcond=None)
    if d2 < 0:
        d1, d2 = max(float(D.mean()), 0.0), 0.0
    elif d1 < 0:
        d1, d2 = 0.0, max(float(x @ D / (x @ x)), 0.0)
    return float(d1), float(d2)


def _common_sinr_fn(model):
    a = model._impairment()
    den = model.delta * model.P * model.beta
    G = model.gain

    def f(S):
        return S * np.sum(a / (den * (G - model.Dsecond * S))) - 1.0

    return f


def closed_form_common_sinr(model):
    """Common SINR when ``D'' = 0``."""
    if model.Dsecond != 0:
        raise ValueError("closed form requires Dsecond == 0")
    a = model._impairment()
    return float(1.0 / np.sum(a / (model.delta * model.P * model.beta * model.gain)))


def solve_common_sinr(model):
    """Largest root of the sum-to-one condition, by bracketing root search.

    The left-hand side is increasing on ``[0, min_k |g_k+c_k|^2 / D'')`` and
    lies above its ``D'' = 0`` counterpart, so the root never exceeds the
    closed-form value.  The bracket's upper end is the smaller of that value
    and 0.999 of the singularity, pushed closer to the singularity if needed.
    """
    G = model.gain
    if np.any(G <= 0):
        raise InfeasibleAllocationError("every user needs |g + c|^2 > 0")
    S0 = closed_form_common_sinr(model.with_(Dsecond=0.0))
    if model.Dsecond == 0:
        return S0
    f = _common_sinr_fn(model)
    with np.errstate(over="ignore"):
        limit = float(np.min(G) / model.Dsecond)
    hi = min(S0, 0.999 * limit)
    for _ in range(12):
        if f(hi) >= 0:
            break
        hi = limit - (limit - hi) / 10.0
    else:
        raise InfeasibleAllocationError("no root below the distortion singularity")
    if f(hi) == 0:
        return float(hi)
    return float(brentq(f, 0.0, hi, xtol=1e-300, rtol=1e-14, maxiter=500))


def allocate(model, common_sinr=None):
    """Power allocation ``xi_k`` that equalises all users' SINR."""
    S = solve_common_sinr(model) if common_sinr is None else common_sinr
    a = model._impairment()
    xi = S * a / (model.delta * model.P * model.beta * (model.gain - model.Dsecond * S))
    if np.any(xi < 0):
        raise InfeasibleAllocationError("negative power allocation")
    return xi


def closed_form_allocation(model):
    """Explicit allocation for ``D'' = 0``, written as a normalised ratio."""
    w = model._impairment() / (model.delta * model.beta * model.gain)
    return w / w.sum()


def mr_allocation(P, beta, delta, rho=0.0, Dprime=0.0, N0_over_T=1.0):
    """Allocation for maximum-ratio precoding, where ``I_k + E_k = 1`` and the gain is common."""
    beta = np.asarray(beta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    w = (P * beta * (np.abs(1.0 + np.asarray(rho)) ** 2 + Dprime) + N0_over_T) / (beta * delta)
    return w / w.sum()


def zf_allocation(P, beta, delta, E, rho=0.0, Dprime=0.0, N0_over_T=1.0):
    """Allocation for zero-forcing precoding, where ``I_k = 0`` and the gain is common."""
    beta = np.asarray(beta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    w = (P * beta * (np.asarray(E) * np.abs(1.0 + np.asarray(rho)) ** 2 + Dprime) + N0_over_T) / (
        beta * delta
    )
    return w / w.sum()


def achieved_sinr(model, xi):
    """Per-user SINR for allocation ``xi`` with ``D_k = D' + delta_k xi_k D''``."""
    xi = np.asarray(xi, dtype=float)
    D = model.Dprime + model.delta * xi * model.Dsecond
    num = model.delta * xi * model.P * model.beta * model.gain
    den = model.P * model.beta * ((model.I + model.E) * np.abs(1.0 + model.rho) ** 2 + D) + model.N0_over_T
    return num / den


def write_allocation_csv(path, model, xi):
    s = achieved_sinr(model, xi)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["user", "beta", "delta", "xi", "sinr_db"])
        for k in range(model.K):
            w.writerow([k, repr(float(model.beta[k])), repr(float(model.delta[k])),
                        repr(float(xi[k])), repr(float(10 * np.log10(s[k])))])
