"""Exact discrete optimal transport.

Every value here comes from an exact solve of the transportation LP (POT's
network simplex), never from an entropic approximation: sign tests on
``C(nu, rho) - C(mu, rho)`` near zero need unbiased values.

Conventions
-----------
``solve_transport`` handles both senses. A ``"max"`` problem is solved as a
``"min"`` problem on the negated costs and the duals are flipped back, so
that for the returned plan

* ``max``: ``dual_f[i] + dual_g[j] >= c[i, j]``,
* ``min``: ``dual_f[i] + dual_g[j] <= c[i, j]``,

with equality on the support of the plan, and ``dual_g[0] == 0``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionError, InvalidInput, SolverError
from .measures import DiscreteMeasure, _check_same_dim, second_moment, sorted_atoms

# POT probes every installed array backend on import; we only use numpy.
for _name in ("PYTORCH", "JAX", "CUPY", "TENSORFLOW"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_name}", "1")

import ot  # noqa: E402

Sense = Literal["min", "max"]

MAX_ITER = 10_000_000


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal coupling together with an optimal dual pair."""

    matrix: NDArray[np.float64]
    primal_value: float
    dual_f: NDArray[np.float64]
    dual_g: NDArray[np.float64]
    sense: Sense

    @property
    def dual_value(self) -> float:
        return float(self.matrix.sum(axis=1) @ self.dual_f + self.matrix.sum(axis=0) @ self.dual_g)

    def row_conditionals(self) -> NDArray[np.float64]:
        """Row-normalised plan (conditional law of the second coordinate)."""
        rows = self.matrix.sum(axis=1, keepdims=True)
        return np.divide(self.matrix, rows, out=np.zeros_like(self.matrix), where=rows > 0)

    def column_conditionals(self) -> NDArray[np.float64]:
        """Column-normalised plan (conditional law of the first coordinate)."""
        cols = self.matrix.sum(axis=0, keepdims=True)
        return np.divide(self.matrix, cols, out=np.zeros_like(self.matrix), where=cols > 0)


def _simplex_weights(w: ArrayLike, name: str) -> NDArray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInput(f"{name} must be a non-empty non-negative vector")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InvalidInput(f"{name} sums to {w.sum()!r}, not 1")
    return w


def solve_transport(cost: ArrayLike, a: ArrayLike, b: ArrayLike, sense: Sense = "min") -> TransportPlan:
    """Solve ``opt_{pi in Pi(a, b)} sum_ij c_ij pi_ij`` exactly.

    Rows or columns carrying zero mass are removed before the solve and put
    back as zero rows/columns of the plan; their potentials are filled in by
    the c-transform of the other side, which keeps the dual feasible.
    """
    c = np.asarray(cost, dtype=float)
    a = _simplex_weights(a, "a")
    b = _simplex_weights(b, "b")
    if c.ndim != 2 or c.shape != (a.size, b.size):
        raise InvalidInput(f"cost shape {c.shape} does not match weights ({a.size}, {b.size})")
    if not np.all(np.isfinite(c)):
        raise InvalidInput("cost matrix has non-finite entries")
    if sense not in ("min", "max"):
        raise InvalidInput(f"sense must be 'min' or 'max', got {sense!r}")

    sign = 1.0 if sense == "min" else -1.0
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    a_r = a[rows] / a[rows].sum()
    b_r = b[cols] / b[cols].sum()
    c_r = np.ascontiguousarray(c[np.ix_(rows, cols)])

    if rows.size == 1 or cols.size == 1:
        # the product coupling is the only one
        plan_r = np.outer(a_r, b_r)
        if cols.size == 1:
            u, v = c_r[:, 0].copy(), np.zeros(1)
        else:
            u, v = c_r[0, :1].copy(), c_r[0] - c_r[0, 0]
    else:
        plan_r, log = ot.emd(a_r, b_r, sign * c_r, numItermax=MAX_ITER, log=True)
        if log.get("result_code", 1) != 1:
            raise SolverError(f"network simplex failed: {log.get('warning')}")
        u = sign * np.asarray(log["u"], dtype=float)
        v = sign * np.asarray(log["v"], dtype=float)
    shift = v[0]
    u, v = u + shift, v - shift

    plan = np.zeros_like(c)
    plan[np.ix_(rows, cols)] = plan_r
    f = np.empty(a.size)
    g = np.empty(b.size)
    f[rows] = u
    g[cols] = v
    reduce = np.max if sense == "max" else np.min
    if cols.size < b.size:
        missing = np.setdiff1d(np.arange(b.size), cols)
        g[missing] = reduce(c[np.ix_(rows, missing)] - f[rows, None], axis=0)
    if rows.size < a.size:
        missing = np.setdiff1d(np.arange(a.size), rows)
        f[missing] = reduce(c[missing, :] - g[None, :], axis=1)
    if cols[0] != 0:
        # renormalise so that dual_g[0] == 0 also when column 0 was pruned
        f, g = f + g[0], g - g[0]

    value = float(np.sum(plan * c))
    return TransportPlan(plan, value, f, g, sense)


def inner_product_cost(x: DiscreteMeasure, y: DiscreteMeasure) -> NDArray:
    _check_same_dim(x, y)
    return x.points @ y.points.T


def squared_distance_cost(x: DiscreteMeasure, y: DiscreteMeasure) -> NDArray:
    _check_same_dim(x, y)
    return ot.dist(x.points, y.points, metric="sqeuclidean")


def distance_cost(x: DiscreteMeasure, y: DiscreteMeasure) -> NDArray:
    _check_same_dim(x, y)
    return ot.dist(x.points, y.points, metric="euclidean")


def max_covariance_plan(mu: DiscreteMeasure, rho: DiscreteMeasure) -> TransportPlan:
    return solve_transport(inner_product_cost(mu, rho), mu.weights, rho.weights, "max")


def max_covariance(mu: DiscreteMeasure, rho: DiscreteMeasure) -> float:
    """``C(mu, rho) = sup_pi int <x, y> dpi`` over couplings of ``mu`` and ``rho``."""
    return max_covariance_plan(mu, rho).primal_value


def wasserstein2_sq(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return solve_transport(squared_distance_cost(mu, nu), mu.weights, nu.weights, "min").primal_value


def wasserstein1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return solve_transport(distance_cost(mu, nu), mu.weights, nu.weights, "min").primal_value


def wasserstein2_sq_quantile(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Squared W2 on the line via the comonotone (quantile) coupling.

    The two quantile functions are step functions; on the common refinement
    of their jump levels the integral of the squared difference is a finite
    sum.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise DimensionError("quantile formula for W2 needs d = 1")
    x, wx = sorted_atoms(mu)
    y, wy = sorted_atoms(nu)
    cx = np.cumsum(wx)
    cy = np.cumsum(wy)
    cx[-1] = cy[-1] = 1.0
    levels = np.union1d(cx, cy)
    widths = np.diff(np.concatenate([[0.0], levels]))
    mids = levels - widths / 2
    qx = x[np.minimum(np.searchsorted(cx, mids), x.size - 1)]
    qy = y[np.minimum(np.searchsorted(cy, mids), y.size - 1)]
    return float(np.sum(widths * (qx - qy) ** 2))


def w2_identity_residual(mu: DiscreteMeasure, rho: DiscreteMeasure) -> float:
    """``W2^2 - (M2(mu) + M2(rho) - 2 C(mu, rho))``; zero up to rounding."""
    return wasserstein2_sq(mu, rho) - (
        second_moment(mu) + second_moment(rho) - 2.0 * max_covariance(mu, rho)
    )
