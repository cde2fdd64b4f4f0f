"""
Efficiency, out-of-band leakage and in-band distortion versus backoff
=====================================================================

Each backoff is one operating point of the Rapp amplifier.  Backing off
trades efficiency for lower ACLR and lower in-band distortion.  The
efficiency limit ``eta_max`` is the best efficiency whose ACLR stays below
-45 dB.
"""

# %%
import numpy as np

from mimopa.channel import SimulationConfig
from mimopa.harness import SweepConfig, eta_max, run_backoff_sweep

cfg = SimulationConfig()
sweep = SweepConfig()  # 200 trials per operating point

# %%
points = {s: run_backoff_sweep(cfg, s, sweep=sweep) for s in ("MR", "DTCE")}

# %%
print("scheme  backoff   eta    ACLR dB   a_k dB    sigma^2")
for s, pts in points.items():
    for p in pts:
        print(f"{s:6s} {p.backoff_db:6.1f}  {p.eta:.3f}  {p.aclr_db:7.2f}  "
              f"{np.mean(p.clip_power_db):+7.3f}  {np.mean(p.sigma2):.2e}")

# %%
for s, pts in points.items():
    print(f"{s}: eta_max at ACLR <= -45 dB is {eta_max(pts, -45.0):.3f}")
