"""The first-order x-drift b1 under affine coordinate changes.

b1 = r - q - kappa theta rho / sigma enters the energy estimates.  A shear
x -> x + m y followed by the scalings that restore the Heston form maps b1
to a b1 / (1 + 2 kappa m), so b1 is rescaled but never removed.  Parameter
sets with b1 = 0 have to be chosen that way from the start.
"""
from hestonvi.errors import NormalizationError
from hestonvi.params import HestonParams, affine_change, derive_constants, normalize_b1

p = HestonParams(sigma=1.0, rho=-0.5, kappa=1.0, theta=0.5, r=0.5, q=0.2)
b1 = derive_constants(p).b1
print(f"original b1 = {b1:+.4f}")
for m in (0.0, 0.5, 2.0, 10.0):
    for a in (0.5, 1.0, 2.0):
        ch = affine_change(p, m=m, a=a)
        b1t = derive_constants(ch.transformed).b1
        print(f"m = {m:4.1f}, a = {a:3.1f}: b1 = {b1t:+.4f}"
              f"   a b1/(1+2 kappa m) = {a * b1 / (1 + 2 * p.kappa * m):+.4f}")

try:
    normalize_b1(p)
except NormalizationError as e:
    print("normalize_b1:", e)

q = HestonParams(sigma=1.0, rho=0.5, kappa=1.0, theta=0.5, r=0.5, q=0.25)
print(f"b1 = {derive_constants(q).b1:+.2e} natively; identity change:",
      normalize_b1(q).is_identity)
