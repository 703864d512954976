"""Convex order of discrete measures through optimal transport.

``mu <=_c nu`` iff ``C(mu, rho) <= C(nu, rho)`` for every ``rho`` supported in
the unit ball, where ``C`` is the maximal covariance over couplings. The
package estimates ``V(mu, nu) = inf_rho [C(nu, rho) - C(mu, rho)]``, checks
the answer against exact oracles and, when order fails, builds a
calendar-spread arbitrage.

Modules
-------
measures      discrete measures, example families, ball grids, file IO
ot_core       exact transport LP, C, W1, W2
convex_order  V estimators (indirect / direct Dirichlet methods), W2 checks
oracles       1-D quantile test, martingale-coupling feasibility LP
arbitrage     barycentric projection, max-affine spreads, verification
cli           ``python -m cvxorder`` / ``cvxorder`` command
"""

from .arbitrage import CalendarSpread, detect_arbitrage, verify_spread
from .convex_order import (
    ConvexOrderReport,
    FreeRho,
    GridRho,
    Method,
    Verdict,
    check_easy_bound,
    check_w2_inequality,
    estimate_V,
    estimate_V_direct,
    estimate_V_indirect,
    objective,
    optimize_simplex,
)
from .exceptions import DimensionError, InvalidInput, SolverError
from .measures import (
    BallGrid,
    DiscreteMeasure,
    ball_grid,
    from_samples,
    load_measure,
    make_example,
    mean,
    quantile,
    second_moment,
)
from .oracles import martingale_feasibility, quantile_test
from .ot_core import (
    TransportPlan,
    max_covariance,
    solve_transport,
    wasserstein1,
    wasserstein2_sq,
    wasserstein2_sq_quantile,
)

__version__ = "0.1.0"
