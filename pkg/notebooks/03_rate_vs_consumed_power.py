"""
Sum rate versus consumed power
==============================

For every consumed power the radiated power is ``eta * P_cons``.  The sweep
picks, per scheme, the precoder parameter and backoff that maximise the
mean max-min sum rate over random user drops, subject to the ACLR limit.
This script runs a reduced grid; ``mimopa rate-power`` runs the full one.
"""

# %%
import numpy as np

from mimopa.channel import SimulationConfig
from mimopa.harness import SweepConfig, rate_power_sweep

cfg = SimulationConfig(K=4)
sweep = SweepConfig(
    schemes=("MR", "ZF", "DTCE"),
    backoffs_db=(2.0, 6.0, 10.0, 14.0),
    theta_points=3,
    trials=60,
    drops=60,
    p_cons_db=(0.0, 20.0, 40.0),
)

# %%
res = rate_power_sweep(cfg, sweep)

# %%
print("scheme  P_cons[dB]  eta    backoff  rate [bit/s/Hz]")
for row in res.rows:
    db = round(10 * np.log10(row["P_cons"] * cfg.beta_min / cfg.noise_density_ratio), 6)
    print(f"{row['scheme']:6s} {db + 0.0:8.1f}  {row['best_eta']:.3f}  {row['backoff']:6.1f}  "
          f"{row['sum_rate']:6.2f} +/- {row['sum_rate_se']:.2f}")
