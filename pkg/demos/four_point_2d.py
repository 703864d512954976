"""A two-dimensional case: four atoms on the axes at distance 1 + s against
four atoms at distance 1. Order holds for s <= 0.

The direct method optimises over the atoms of rho as well as its weights,
so it is also shown, with the witness rho it found for s = 0.5.
"""

import numpy as np

from cvxorder import Method, estimate_V, make_example

for s in np.linspace(-1, 1, 9):
    mu, nu = make_example("four_point", s)
    rep = estimate_V(mu, nu, Method.INDIRECT_HIST, g=21, N=100)
    direct = estimate_V(mu, nu, Method.DIRECT, m=20, N=100, oracle=False)
    print(f"s={s:+.2f}  V(grid)={rep.v_hat:+.4f}  V(direct)={direct.v_hat:+.4f}  verdict={rep.verdict.value}")

mu, nu = make_example("four_point", 0.5)
rep = estimate_V(mu, nu, Method.INDIRECT_HIST, g=21, N=100)
rho = rep.witness_rho.measure
heavy = rho.weights > 0.05
print("witness rho for s = 0.5 (atoms with weight > 5%):")
for x, w in zip(rho.points[heavy], rho.weights[heavy]):
    print(f"  ({x[0]:+.3f}, {x[1]:+.3f})  weight {w:.3f}")
