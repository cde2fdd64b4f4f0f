"""
Amplitude statistics of the antenna signals
===========================================

Linear precoders add up many independent symbols on every antenna, so the
pulse-shaped antenna signal is close to complex Gaussian.  The
constant-envelope precoder fixes every symbol-rate sample to the same
magnitude; only the pulse shaping between samples moves the envelope.
"""

# %%
import numpy as np

from mimopa.channel import SimulationConfig
from mimopa.harness import par_ensemble
from mimopa.waveform import par_ccdf

cfg = SimulationConfig()  # M=32, K=4, L=4, N=64, 7x oversampling
thr = np.arange(0.0, 12.0, 0.05)

# %%
# CCDF of instantaneous power over mean power, pooled over antennas and blocks
curves = {}
for scheme in ("MR", "ZF", "RZF", "DTCE"):
    x = par_ensemble(cfg, scheme, blocks=100, seed=1)
    curves[scheme] = par_ccdf(x, thr)

# %%
# level exceeded with probability 1e-3 and 1e-2
for scheme, c in curves.items():
    p3 = thr[np.argmax(c < 1e-3)]
    p2 = thr[np.argmax(c < 1e-2)]
    print(f"{scheme:5s}  1e-2: {p2:5.2f} dB   1e-3: {p3:5.2f} dB")

# %%
# a complex Gaussian has CCDF exp(-x); the linear schemes sit on it
gauss = np.exp(-(10 ** (thr / 10)))
for scheme in ("MR", "ZF"):
    i = np.searchsorted(thr, 6.0)
    print(f"{scheme} at 6 dB: {curves[scheme][i]:.2e}  (Gaussian {gauss[i]:.2e})")
