"""
Max-min power allocation for one user drop
==========================================

Users far from the array get more power so that every user ends up at the
same SINR.  With an in-band distortion that grows with a user's own power
the common SINR is the largest root of a scalar equation.
"""

# %%
import numpy as np

from mimopa.allocation import AllocationModel, achieved_sinr, allocate, mr_allocation
from mimopa.channel import SimulationConfig, draw_pathloss, lmmse_variances

cfg = SimulationConfig(K=6)
beta = draw_pathloss(cfg, np.random.default_rng(4))
delta, err = lmmse_variances(cfg, beta)
P = 10 * cfg.noise_density_ratio / beta.min()  # cell-edge SNR of 10 dB

# %%
# maximum-ratio constants: array gain sqrt(M), interference delta_k
model = AllocationModel(beta=beta, delta=delta, g=np.sqrt(cfg.M), c=-0.05, rho=-0.01,
                        I=delta, E=err, Dprime=0.01, P=P)
xi = allocate(model)
for k in np.argsort(beta):
    print(f"user {k}: beta {10 * np.log10(beta[k]):7.1f} dB  xi {xi[k]:.3f}  "
          f"SINR {10 * np.log10(achieved_sinr(model, xi)[k]):5.2f} dB")

# %%
# the maximum-ratio shortcut gives the same allocation (c only scales the gain)
print(np.allclose(xi, mr_allocation(P, beta, delta, rho=-0.01, Dprime=0.01)))

# %%
# a distortion slope makes strong allocations costlier and lowers the common SINR
for slope in (0.0, 0.5, 2.0):
    m = model.with_(Dsecond=slope)
    s = achieved_sinr(m, allocate(m))
    print(f"D'' = {slope}: common SINR {10 * np.log10(s[0]):.2f} dB")
