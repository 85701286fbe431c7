"""How fast the penalized solutions approach the VI solution.

For eps = 1e-2 ... 1e-6 this prints the penalty-term norm, which should
shrink like eps, and the distance to the projected-SOR solution, which
should shrink at least like sqrt(eps).
"""
import warnings

import numpy as np

from hestonvi.errors import CoefficientWarning
from hestonvi.problems import active_obstacle
from hestonvi.solvers import PenaltyConfig, penalty_rate_table
from hestonvi.weighted_space import fit_loglog_slope

# b1 != 0 here; the Dirichlet x-sides keep the form coercive
warnings.simplefilter("ignore", CoefficientWarning)
prob = active_obstacle(n=25)
cfg = PenaltyConfig(eps_sequence=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
rows = penalty_rate_table(prob.form, cfg, prob.f, prob.psi, prob.g)

print(f"{'eps':>8} {'|penalty|':>12} {'|u_eps - u|_V':>14}")
for r in rows:
    print(f"{r['eps']:8.0e} {r['penalty_norm']:12.4e} {r['v_distance']:14.4e}")

eps = [r["eps"] for r in rows]
print(f"slope of penalty norm: {fit_loglog_slope(eps, [r['penalty_norm'] for r in rows]):.3f}"
      " (expect about 1)")
print(f"slope of V distance:   {fit_loglog_slope(eps, [r['v_distance'] for r in rows]):.3f}"
      " (expect at least 0.5)")
print("V distance against sqrt(eps):",
      np.round([r["v_distance"] / np.sqrt(r["eps"]) for r in rows], 4))
