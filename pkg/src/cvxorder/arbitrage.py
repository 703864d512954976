"""Calendar-spread arbitrage from a failed convex-order test.

If ``C(nu, rho) - C(mu, rho) < 0`` for some ``rho``, the optimal plan between
``rho`` and ``nu`` yields a convex ``f`` with ``int f dnu < int f dmu``. Buying
``f(y)`` at the later maturity, selling ``f(x)`` at the earlier one and
holding ``-grad f(x)`` units of the asset in between then has a strictly
positive payoff in every state.

The convex function is represented as a max of affine pieces, which makes
convexity and the subgradient inequality hold by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import isotonic_regression, least_squares

from .convex_order import ConvexOrderReport, Method, RhoCandidate, Verdict, estimate_V
from .exceptions import InvalidInput
from .measures import DiscreteMeasure, _check_same_dim
from .ot_core import TransportPlan, max_covariance_plan


@dataclass(frozen=True, eq=False)
class CalendarSpread:
    """``f(x) = max_i <g_i, x> + c_i`` with one anchor point per piece."""

    gradients: NDArray[np.float64]
    intercepts: NDArray[np.float64]
    anchors: NDArray[np.float64]

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gradients, dtype=float))
        c = np.asarray(self.intercepts, dtype=float).reshape(-1)
        y = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if not (g.shape == y.shape and c.shape[0] == g.shape[0]):
            raise InvalidInput("gradients, intercepts and anchors must describe the same pieces")
        for name, arr in (("gradients", g), ("intercepts", c), ("anchors", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.gradients.shape[1]

    def _affine(self, x: ArrayLike) -> NDArray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return x @ self.gradients.T + self.intercepts

    def __call__(self, x: ArrayLike) -> NDArray:
        """Evaluate ``f`` at the rows of ``x``."""
        return self._affine(x).max(axis=1)

    def gradient(self, x: ArrayLike) -> NDArray:
        """Subgradient selector: the slope of the lowest-index active piece."""
        return self.gradients[np.argmax(self._affine(x), axis=1)]

    def integrate(self, m: DiscreteMeasure) -> float:
        return float(m.weights @ self(m.points))

    def to_json(self) -> str:
        pieces = [
            {"g": g.tolist(), "c": float(c), "anchor": y.tolist()}
            for g, c, y in zip(self.gradients, self.intercepts, self.anchors)
        ]
        return json.dumps({"pieces": pieces})

    @classmethod
    def from_json(cls, text: str) -> CalendarSpread:
        pieces = json.loads(text)["pieces"]
        if not pieces:
            raise InvalidInput("spread needs at least one piece")
        return cls(
            np.array([p["g"] for p in pieces], dtype=float),
            np.array([p["c"] for p in pieces], dtype=float),
            np.array([p["anchor"] for p in pieces], dtype=float),
        )


@dataclass(frozen=True, eq=False)
class ArbitrageReport:
    found: bool
    gap: float
    spread: CalendarSpread | None
    witness_rho: RhoCandidate
    estimate: ConvexOrderReport = field(repr=False)
    fallback: bool = False

    def to_dict(self) -> dict:
        out = {"found": self.found, "gap": self.gap, "fallback": self.fallback}
        out.update(self.estimate.to_dict())
        if self.spread is not None:
            out["spread"] = json.loads(self.spread.to_json())
        return out


def barycentric_projection(
    plan: TransportPlan | NDArray, rho_points: ArrayLike, nu_points: ArrayLike
) -> tuple[NDArray, NDArray]:
    """Conditional mean of the first coordinate given the second.

    Returns ``(anchors, gradients)``: the atoms ``y_j`` of the second marginal
    with positive mass and ``g_j = sum_i pi_ij x_i / sum_i pi_ij``.
    """
    pi = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    x = np.atleast_2d(np.asarray(rho_points, dtype=float))
    y = np.atleast_2d(np.asarray(nu_points, dtype=float))
    if pi.size == 0:
        raise InvalidInput("empty transport plan")
    if pi.shape != (x.shape[0], y.shape[0]):
        raise InvalidInput(f"plan shape {pi.shape} does not match {x.shape[0]} x {y.shape[0]} points")
    mass = pi.sum(axis=0)
    keep = mass > 0
    grads = (pi[:, keep].T @ x) / mass[keep, None]
    return y[keep], grads


def _longest_paths(anchors: NDArray, gradients: NDArray, tol: float):
    """Longest-path potentials from anchor 0 on edges ``j -> k`` of weight
    ``<g_j, y_k - y_j>``. Returns ``(v, ok)``; ``ok`` is False when a
    positive cycle kept the relaxation from settling within ``m`` rounds."""
    m = anchors.shape[0]
    w = gradients @ anchors.T - np.einsum("ij,ij->i", gradients, anchors)[:, None]
    v = np.full(m, -np.inf)
    v[0] = 0.0
    for _ in range(m):
        cand = (v[:, None] + w).max(axis=0)
        better = cand > v + tol
        if not better.any():
            return v, v[0] <= tol
        v = np.where(better, cand, v)
    return v, False


def fit_intercepts(anchors: ArrayLike, gradients: ArrayLike) -> tuple[NDArray, bool]:
    """Intercepts ``c_j`` such that piece ``j`` is active at its anchor.

    Potentials ``v`` satisfy ``v_k >= v_j + <g_j, y_k - y_j>`` with
    ``v_0 = 0`` and are computed by Bellman-Ford style longest paths; then
    ``c_j = v_j - <g_j, y_j>``. This succeeds exactly when the pairs
    ``(y_j, g_j)`` are cyclically monotone.

    Otherwise (sampling noise) we fall back: in 1-D the gradients are first
    replaced by their isotonic projection along the sorted anchors, which
    restores monotonicity; in higher dimension the intercepts are fitted by
    least squares of ``f(y_j)`` to the truncated potentials. The second
    return value flags the fallback.
    """
    y = np.atleast_2d(np.asarray(anchors, dtype=float))
    g = np.atleast_2d(np.asarray(gradients, dtype=float))
    if y.shape[0] == 0 or y.shape != g.shape:
        raise InvalidInput("need at least one (anchor, gradient) pair of matching shape")
    scale = 1.0 + np.abs(y).max() * (1.0 + np.abs(g).max())
    tol = 1e-12 * scale
    v, ok = _longest_paths(y, g, tol)
    if ok:
        return v - np.einsum("ij,ij->i", g, y), False

    if y.shape[1] == 1:
        order = np.argsort(y[:, 0], kind="stable")
        g_iso = g.copy()
        g_iso[order, 0] = isotonic_regression(g[order, 0]).x
        v, ok = _longest_paths(y, g_iso, tol)
        if ok:
            return v - np.einsum("ij,ij->i", g_iso, y), True
    v = np.where(np.isfinite(v), v, 0.0)
    c0 = v - np.einsum("ij,ij->i", g, y)

    def resid(c):
        return (y @ g.T + c).max(axis=1) - v

    return least_squares(resid, c0).x, True


def build_spread(plan: TransportPlan, rho: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[CalendarSpread, bool]:
    anchors, grads = barycentric_projection(plan, rho.points, nu.points)
    intercepts, fallback = fit_intercepts(anchors, grads)
    return CalendarSpread(grads, intercepts, anchors), fallback


def detect_arbitrage(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    method: Method | str = Method.INDIRECT_HIST,
    **search,
) -> ArbitrageReport:
    """Search for ``rho`` with ``C(nu, rho) < C(mu, rho)`` and turn it into a
    calendar spread. ``search`` is passed to
    :func:`~cvxorder.convex_order.estimate_V` (``g``, ``N``, ``m``, ``seed``,
    ``epsilon``, ...)."""
    _check_same_dim(mu, nu)
    rep = estimate_V(mu, nu, method, **search)
    if rep.v_hat >= -rep.epsilon or rep.verdict is not Verdict.NOT_ORDERED:
        return ArbitrageReport(False, 0.0, None, rep.witness_rho, rep)
    rho = rep.witness_rho.measure
    plan = max_covariance_plan(rho, nu)
    spread, fallback = build_spread(plan, rho, nu)
    gap = spread.integrate(mu) - spread.integrate(nu)
    return ArbitrageReport(bool(gap > 0), gap, spread, rep.witness_rho, rep, fallback)


@dataclass(frozen=True)
class SpreadDiagnostics:
    gap: float
    min_payoff: float
    min_convexity_bracket: float
    pairs: int

    @property
    def ok(self) -> bool:
        return self.min_payoff >= self.gap - 1e-9


def payoff(spread: CalendarSpread, mu: DiscreteMeasure, nu: DiscreteMeasure, x: ArrayLike, y: ArrayLike) -> NDArray:
    """Strategy payoff ``u1(x) - int u1 dmu + u2(y) - int u2 dnu + D(x)(y - x)``
    with ``u1 = -f``, ``u2 = f`` and ``D = -grad f``."""
    x = np.asarray(x, dtype=float).reshape(-1, spread.dim)
    y = np.asarray(y, dtype=float).reshape(-1, spread.dim)
    hedge = np.einsum("ij,ij->i", -spread.gradient(x), y - x)
    return -spread(x) + spread.integrate(mu) + spread(y) - spread.integrate(nu) + hedge


def verify_spread(
    spread: CalendarSpread,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    x: ArrayLike | None = None,
    y: ArrayLike | None = None,
    n_pairs: int = 1000,
    seed: int = 0,
) -> SpreadDiagnostics:
    """Evaluate the payoff on test pairs; by default ``n_pairs`` random pairs
    drawn around the supports of ``mu`` and ``nu``."""
    if x is None or y is None:
        rng = np.random.default_rng(seed)
        pool = np.vstack([mu.points, nu.points, spread.anchors])
        lo, hi = pool.min(axis=0), pool.max(axis=0)
        pad = 0.5 * (hi - lo) + 1.0
        x = rng.uniform(lo - pad, hi + pad, size=(n_pairs, spread.dim))
        y = rng.uniform(lo - pad, hi + pad, size=(n_pairs, spread.dim))
    x = np.asarray(x, dtype=float).reshape(-1, spread.dim)
    y = np.asarray(y, dtype=float).reshape(-1, spread.dim)
    gap = spread.integrate(mu) - spread.integrate(nu)
    bracket = spread(y) - spread(x) - np.einsum("ij,ij->i", spread.gradient(x), y - x)
    values = payoff(spread, mu, nu, x, y)
    return SpreadDiagnostics(gap, float(values.min()), float(bracket.min()), len(x))
