"""Solve one instance under three fairness settings and cross-check with the oracle.

Run with ``python3 demos/quickstart.py``.
"""

import numpy as np

from cermec import kvdoc
from cermec.kkt_solvers import kkt_residuals, solve_cfba, solve_mfba, solve_zfba
from cermec.oracle import solve_generic
from cermec.scenario import Scenario, draw_channels

with open(__file__.replace("quickstart.py", "scenario.txt")) as fh:
    s = Scenario.from_text(fh.read())
ch = draw_channels(s, seed=7)

print(f"{'solver':8s} {'total':>9s} {'min':>8s} {'JFI':>6s} {'iters':>5s} {'kkt':>8s}")
for res in (solve_zfba(s, ch), solve_cfba(s, ch, 1.0), solve_mfba(s, ch)):
    worst = max(kkt_residuals(s, ch, res).values())
    print(f"{res.solver:8s} {res.total_bits:9.1f} {np.min(res.R):8.1f} {res.jain:6.3f} "
          f"{res.iterations:5d} {worst:8.1e}")

zf = solve_zfba(s, ch)
ref = solve_generic(s, ch, 0.0)
print(f"\noracle total {ref.total_bits:.1f}, relative difference "
      f"{abs(ref.objective - zf.objective) / ref.objective:.1e}")
print("\nthroughput allocation:")
print(kvdoc.dumps([("t", zf.allocation.t), ("P", zf.P), ("p", zf.p), ("f", zf.allocation.f), ("R", zf.R)]))
