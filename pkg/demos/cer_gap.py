"""Offloading gain from energy recycling and its noise-free approximation.

As the noise floor drops the exact gain approaches the approximation.
Run with ``python3 demos/cer_gap.py``.
"""

import numpy as np

from cermec.cer_analysis import gap_approx, gap_exact, setting_from_channels
from cermec.scenario import default_scenario, draw_channels

s = default_scenario(seed=2)
ch = draw_channels(s, 2)
base = setting_from_channels(s, ch)
approx = gap_approx(base)
print("noise [W]    " + "  ".join(f"ws{k + 1:<7d}" for k in range(base.K)))
print("approx       " + "  ".join(f"{g:.3e}" for g in approx))
for noise in np.logspace(-4, -14, 6):
    exact = gap_exact(base.replace(noise=noise))
    print(f"{noise:.1e}      " + "  ".join(f"{g:.3e}" for g in exact))
