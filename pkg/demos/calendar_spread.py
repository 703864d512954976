"""From a failed order test to a trading strategy.

With mu = N(0, 2) at the first maturity and nu = N(0, 1) at the second, no
martingale connects them. The witness rho of the failed test yields a convex
payoff f with int f dnu < int f dmu; selling f(X), buying f(Y) and holding
-f'(X) units of the asset in between earns at least the gap in every state.
"""

import sys
from pathlib import Path

import numpy as np

from cvxorder import detect_arbitrage, make_example, verify_spread
from cvxorder.plotting import svg_line_plot

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output")
out_dir.mkdir(exist_ok=True)

mu, nu = make_example("gauss_sampled", np.sqrt(2.0), n=500, seed=0)
rep = detect_arbitrage(mu, nu, g=21, N=100)
print(f"V estimate {rep.estimate.v_hat:+.4f}, arbitrage found: {rep.found}, gap {rep.gap:.4f}")

f = rep.spread
diag = verify_spread(f, mu, nu, n_pairs=1000)
print(f"worst payoff over {diag.pairs} random (x, y) pairs: {diag.min_payoff:.4f}")

x = np.linspace(-4, 4, 161)
(out_dir / "calendar_spread.svg").write_text(
    svg_line_plot(x, {"f": f(x[:, None]), "f'": f.gradient(x[:, None])[:, 0]},
                  "payoff and hedge ratio", "x", "value"))

# the same in two dimensions: N(0, 4I) against N(0, I)
mu2, nu2 = make_example("gauss_sampled", 2.0, n=500, seed=0, d=2)
rep2 = detect_arbitrage(mu2, nu2, g=21, N=100)
print(f"2-D: found {rep2.found}, gap {rep2.gap:.4f}, {len(rep2.spread.intercepts)} affine pieces")
