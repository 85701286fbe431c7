"""Why a weighted Neumann condition at y = 0 needs H2 regularity when beta < 1.

The y-only Heston operator has two homogeneous solutions, the Kummer
branches M(a, beta, mu y) and U(a, beta, mu y) with a = r/kappa.  For
beta < 1 the U branch has finite H1 energy yet its weighted trace
y^beta sigma u_y tends to a nonzero constant, while M is smooth and its
trace vanishes.
"""
import numpy as np

from hestonvi.cir import cir_trace, cir_trace_limit, classify_boundary
from hestonvi.params import HestonParams, derive_constants

p = HestonParams(sigma=1.0, rho=0.0, kappa=1.0, theta=0.25, r=0.5, q=0.0)
c = derive_constants(p)
print(f"beta = {c.beta}, mu = {c.mu}, a = {p.r / p.kappa}")

ys = np.logspace(-8, -1, 8)
print(f"{'y':>9} {'trace M':>12} {'trace U':>12}")
for y, tm, tu in zip(ys, cir_trace(p, "M", ys), cir_trace(p, "U", ys)):
    print(f"{y:9.1e} {tm:12.4e} {tu:12.6f}")
print(f"closed-form limit of the U trace: {cir_trace_limit(p):.6f}")

rep = classify_boundary(p)
for (branch, norm), cls in sorted(rep.classes.items()):
    print(f"{branch} branch, {norm} energy near y = 0: {cls}")
