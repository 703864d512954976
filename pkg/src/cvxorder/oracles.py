"""Exact deciders of convex order for finitely supported measures.

Two independent routes, used to validate the optimal-transport estimators:

* :func:`quantile_test` (d = 1): ``mu <=_c nu`` iff
  ``int_0^x (F_mu^{-1} - F_nu^{-1}) >= 0`` for all ``x`` in ``[0, 1]`` with
  equality at ``x = 1``. Quantiles are step functions, so the integral is
  piecewise linear and checking the breakpoints is exact.
* :func:`martingale_feasibility` (any d): Strassen's theorem, i.e. LP
  feasibility of a coupling whose conditional mean of ``y`` given ``x`` is
  ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.optimize import linprog

from .exceptions import DimensionError, SolverError
from .measures import DiscreteMeasure, _check_same_dim, mean, sorted_atoms

QUANTILE_TOL = 1e-12
FEASIBILITY_TOL = 1e-9
PLAN_TOL = 1e-8


@dataclass(frozen=True)
class QuantileViolation:
    x: float
    integral: float


@dataclass(frozen=True)
class MeanMismatch:
    delta: NDArray[np.float64]


@dataclass(frozen=True)
class MartingaleCoupling:
    plan: NDArray[np.float64] = field(repr=False)


@dataclass(frozen=True)
class OracleVerdict:
    ordered: bool
    certificate: QuantileViolation | MeanMismatch | MartingaleCoupling | None = None
    method: str = ""


def integrated_quantile_gap(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[NDArray, NDArray]:
    """Breakpoints ``x_k`` and ``int_0^{x_k} (F_mu^{-1} - F_nu^{-1})``.

    The breakpoints are the union of the cumulative mass levels of both
    measures; 1 is always the last one.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionError("the quantile test needs d = 1")
    x, wx = sorted_atoms(mu)
    y, wy = sorted_atoms(nu)
    cx = np.cumsum(wx)
    cy = np.cumsum(wy)
    cx[-1] = cy[-1] = 1.0
    levels = np.union1d(cx, cy)
    return levels, _quantile_integral(x, cx, levels) - _quantile_integral(y, cy, levels)


def _quantile_integral(atoms: NDArray, cdf: NDArray, levels: NDArray) -> NDArray:
    # int_0^t F^{-1} = sum_k atom_k * |[c_{k-1}, c_k] cap [0, t]|
    lower = np.concatenate([[0.0], cdf[:-1]])
    overlap = np.clip(np.minimum(levels[:, None], cdf[None, :]) - lower[None, :], 0.0, None)
    return overlap @ atoms


def quantile_test(mu: DiscreteMeasure, nu: DiscreteMeasure) -> OracleVerdict:
    levels, gap = integrated_quantile_gap(mu, nu)
    scale = 1.0 + max(np.abs(mu.points).max(), np.abs(nu.points).max())
    tol = QUANTILE_TOL * scale
    if abs(gap[-1]) > tol:
        return OracleVerdict(False, MeanMismatch(mean(mu) - mean(nu)), "quantile")
    k = int(np.argmin(gap))
    if gap[k] < -tol:
        return OracleVerdict(False, QuantileViolation(float(levels[k]), float(gap[k])), "quantile")
    return OracleVerdict(True, None, "quantile")


def _martingale_constraints(mu: DiscreteMeasure, nu: DiscreteMeasure):
    n, m, d = mu.size, nu.size, mu.dim
    # variable pi[i, j] sits at column i * m + j
    rows_sum = sp.kron(sp.eye(n), np.ones((1, m)))
    cols_sum = sp.kron(np.ones((1, n)), sp.eye(m))
    mart = sp.kron(sp.eye(n), nu.points.T)  # (n*d, n*m): sum_j pi_ij y_j
    a_eq = sp.vstack([rows_sum, cols_sum, mart]).tocsr()
    b_eq = np.concatenate([mu.weights, nu.weights, (mu.weights[:, None] * mu.points).reshape(n * d)])
    return a_eq, b_eq


def martingale_residuals(plan: NDArray, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Largest violation of the marginal and martingale constraints."""
    rows = np.abs(plan.sum(axis=1) - mu.weights).max()
    cols = np.abs(plan.sum(axis=0) - nu.weights).max()
    mart = np.abs(plan @ nu.points - mu.weights[:, None] * mu.points).max()
    neg = max(0.0, -plan.min())
    return float(max(rows, cols, mart, neg))


def martingale_feasibility(mu: DiscreteMeasure, nu: DiscreteMeasure) -> OracleVerdict:
    """Decide whether a martingale coupling of ``mu`` and ``nu`` exists.

    Phase one of the simplex method: every equality gets a pair of
    non-negative artificial slacks and we minimise their sum. The measures
    are in convex order iff the optimum is (numerically) zero, in which case
    the returned plan is checked against all constraints before it is handed
    out.
    """
    _check_same_dim(mu, nu)
    delta = mean(mu) - mean(nu)
    scale = 1.0 + max(np.abs(mu.points).max(), np.abs(nu.points).max())
    if np.abs(delta).max() > 1e-9 * scale:
        return OracleVerdict(False, MeanMismatch(delta), "martingale")

    a_eq, b_eq = _martingale_constraints(mu, nu)
    k, nvar = a_eq.shape
    eye = sp.eye(k, format="csr")
    a_full = sp.hstack([a_eq, eye, -eye]).tocsr()
    c = np.concatenate([np.zeros(nvar), np.ones(2 * k)])
    res = linprog(
        c,
        A_eq=a_full,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SolverError(f"phase-one LP failed: {res.message}")
    if res.fun > FEASIBILITY_TOL:
        return OracleVerdict(False, None, "martingale")
    plan = np.clip(res.x[:nvar], 0.0, None).reshape(mu.size, nu.size)
    if martingale_residuals(plan, mu, nu) > PLAN_TOL * scale:
        plan = _polish(plan, a_eq, b_eq)
        if martingale_residuals(plan, mu, nu) > PLAN_TOL * scale:
            raise SolverError("martingale plan fails verification")
    return OracleVerdict(True, MartingaleCoupling(plan), "martingale")


def _polish(plan: NDArray, a_eq, b_eq) -> NDArray:
    # one least-squares correction on the support of the plan
    x = plan.reshape(-1)
    support = np.flatnonzero(x > 0)
    a_s = a_eq[:, support].toarray()
    r = b_eq - a_eq @ x
    dx, *_ = np.linalg.lstsq(a_s, r, rcond=None)
    x = x.copy()
    x[support] = np.clip(x[support] + dx, 0.0, None)
    return x.reshape(plan.shape)


def decide(mu: DiscreteMeasure, nu: DiscreteMeasure, max_cells: int = 40_000) -> OracleVerdict | None:
    """Run the cheapest applicable oracle, or return ``None`` if none applies.

    The martingale LP has ``n * m`` variables; it is skipped above
    ``max_cells`` to keep estimator calls fast.
    """
    _check_same_dim(mu, nu)
    if mu.dim == 1:
        return quantile_test(mu, nu)
    if mu.size * nu.size <= max_cells:
        return martingale_feasibility(mu, nu)
    return None
