"""Finitely supported probability measures on R^d.

A :class:`DiscreteMeasure` stores its atoms as an ``(n, d)`` array and the
masses as an ``(n,)`` array on the simplex. Duplicate atoms are allowed and
never merged; integrals simply add their masses.

Also contains the toy families used throughout the numerical experiments
(:func:`make_example`), grids of the closed ball (:func:`ball_grid`) and the
JSON / CSV measure file readers and writers.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionError, InvalidInput

WEIGHT_TOL = 1e-12

EXAMPLE_FAMILIES = ("gauss_sampled", "two_point", "four_point")


def _frozen(arr: NDArray) -> NDArray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    Parameters
    ----------
    points : array_like, shape (n, d) or (n,)
        Atom locations. A 1-D array is read as ``n`` points on the line.
    weights : array_like, shape (n,), optional
        Masses. Uniform when omitted.
    """

    points: NDArray[np.float64]
    weights: NDArray[np.float64]

    def __init__(self, points: ArrayLike, weights: ArrayLike | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise InvalidInput(f"points must be a non-empty (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("points contain NaN or infinite coordinates")
        n = pts.shape[0]
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
            if w.shape[0] != n:
                raise InvalidInput(f"{n} points but {w.shape[0]} weights")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInput("weights must be finite and non-negative")
            if abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise InvalidInput(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={self.size}, dim={self.dim})"

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def integrate(self, f) -> float:
        """``sum_i w_i f(x_i)`` for a vectorised ``f`` acting on an (n, d) array."""
        return float(np.dot(self.weights, np.asarray(f(self.points), dtype=float)))

    def scaled(self, k: float) -> DiscreteMeasure:
        """Push-forward under ``x -> k x``."""
        return DiscreteMeasure(k * self.points, self.weights)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }


def _check_same_dim(*measures: DiscreteMeasure) -> int:
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise DimensionError(f"measures live in different dimensions: {sorted(dims)}")
    return dims.pop()


def from_samples(samples: ArrayLike) -> DiscreteMeasure:
    """Empirical measure putting mass ``1/n`` on each sample (duplicates kept)."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise InvalidInput("cannot build an empirical measure from zero samples")
    return DiscreteMeasure(arr)


def mean(m: DiscreteMeasure) -> NDArray[np.float64]:
    return m.weights @ m.points


def second_moment(m: DiscreteMeasure) -> float:
    return float(m.weights @ np.einsum("ij,ij->i", m.points, m.points))


def quantile(m: DiscreteMeasure, u: float) -> float:
    """Generalised inverse cdf ``inf{y : m((-inf, y]) >= u}`` of a 1-D measure."""
    if m.dim != 1:
        raise DimensionError("quantile is only defined for d = 1")
    if not (0.0 < u <= 1.0):
        raise InvalidInput(f"quantile level must lie in (0, 1], got {u}")
    x, w = sorted_atoms(m)
    cdf = np.cumsum(w)
    # cumulative sums may undershoot a level they reach exactly
    k = int(np.searchsorted(cdf, u - WEIGHT_TOL, side="left"))
    return float(x[min(k, len(x) - 1)])


def sorted_atoms(m: DiscreteMeasure) -> tuple[NDArray, NDArray]:
    """Atoms of a 1-D measure in ascending order, zero masses dropped."""
    if m.dim != 1:
        raise DimensionError("sorted_atoms requires d = 1")
    keep = m.weights > 0
    x = m.points[keep, 0]
    w = m.weights[keep]
    order = np.argsort(x, kind="stable")
    return x[order], w[order]


# ---------------------------------------------------------------------------
# toy families


def _centered_normal(rng: np.random.Generator, n: int, d: int) -> NDArray:
    z = rng.standard_normal((n, d))
    return z - z.mean(axis=0)


def make_example(
    family: str,
    param: float,
    n: int = 100,
    seed: int = 0,
    d: int = 1,
    coupled: bool = True,
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Return ``(mu, nu)`` for one of the three toy families.

    ``two_point``
        ``mu = (delta_{-1-s} + delta_{1+s}) / 2`` and ``nu = (delta_{-1} + delta_1) / 2``.
    ``four_point``
        the planar analogue with four atoms on the axes, ``d = 2``.
    ``gauss_sampled``
        empirical versions of ``mu = N(0, sigma^2 I)`` and ``nu = N(0, I)``
        built from ``n`` draws in dimension ``d``. ``param`` is ``sigma``.

    With ``coupled=True`` (default) both Gaussian samples come from a single
    centred standard-normal draw ``Z``: ``mu = sigma Z`` and ``nu = Z``. The
    two empirical laws then have identical means and are in convex order
    exactly when ``sigma <= 1``. With ``coupled=False`` the samples are
    independent and uncentred.
    """
    if family == "two_point":
        s = _check_s(param)
        mu = DiscreteMeasure([[-1.0 - s], [1.0 + s]])
        nu = DiscreteMeasure([[-1.0], [1.0]])
        return mu, nu
    if family == "four_point":
        s = _check_s(param)
        r = 1.0 + s
        mu = DiscreteMeasure([[-r, 0.0], [r, 0.0], [0.0, r], [0.0, -r]])
        nu = DiscreteMeasure([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        return mu, nu
    if family in ("gauss_sampled", "gauss"):
        sigma = float(param)
        if not (sigma >= 0.0 and math.isfinite(sigma)):
            raise InvalidInput(f"sigma must be a finite non-negative number, got {param}")
        if n < 1 or d < 1:
            raise InvalidInput("gauss_sampled needs n >= 1 and d >= 1")
        rng = np.random.default_rng(seed)
        if coupled:
            z = _centered_normal(rng, n, d)
            return from_samples(sigma * z), from_samples(z)
        zx = rng.standard_normal((n, d))
        zy = rng.standard_normal((n, d))
        return from_samples(sigma * zx), from_samples(zy)
    raise InvalidInput(f"unknown example family {family!r}; expected one of {EXAMPLE_FAMILIES}")


def _check_s(param: float) -> float:
    s = float(param)
    if not -1.0 <= s <= 1.0:
        raise InvalidInput(f"s must lie in [-1, 1], got {param}")
    return s


# ---------------------------------------------------------------------------
# grids of the ball


@dataclass(frozen=True, eq=False)
class BallGrid:
    """``g`` distinct nodes inside the closed ball of ``radius`` around 0."""

    nodes: NDArray[np.float64]
    radius: float = 1.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes.reshape(-1, 1)
        if np.any(np.linalg.norm(nodes, axis=1) > self.radius + 1e-12):
            raise InvalidInput("grid node outside the ball")
        if len(np.unique(nodes, axis=0)) != len(nodes):
            raise InvalidInput("grid nodes must be pairwise distinct")
        object.__setattr__(self, "nodes", _frozen(nodes))

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def scaled(self, k: float) -> BallGrid:
        return BallGrid(k * self.nodes, self.radius * k)


def _lattice_ball(d: int, r2: int) -> NDArray[np.int64]:
    """Integer vectors with squared norm <= r2."""
    r = math.isqrt(r2)
    axis = range(-r, r + 1)
    pts = np.array(list(itertools.product(axis, repeat=d)), dtype=np.int64)
    return pts[np.einsum("ij,ij->i", pts, pts) <= r2]


def ball_grid(d: int, g: int, radius: float = 1.0) -> BallGrid:
    """Deterministic grid of exactly ``g`` points in the closed ball.

    For ``d = 1`` the nodes are ``g`` equidistant points from ``-radius`` to
    ``radius``. For ``d >= 2`` we take the coarsest cubic lattice
    ``(radius / sqrt(R)) Z^d`` (``R`` a positive integer) that places at least
    ``g`` points in the ball, and keep the ``g`` points closest to the origin
    (ties broken lexicographically).
    """
    if g < 2:
        raise InvalidInput(f"need at least 2 grid points, got {g}")
    if d < 1:
        raise InvalidInput(f"dimension must be positive, got {d}")
    if not radius > 0:
        raise InvalidInput(f"radius must be positive, got {radius}")
    if d == 1:
        return BallGrid(np.linspace(-radius, radius, g).reshape(-1, 1), radius)
    r2 = 1
    while True:
        pts = _lattice_ball(d, r2)
        if len(pts) >= g:
            break
        r2 += 1
    sq = np.einsum("ij,ij->i", pts, pts)
    order = np.lexsort(tuple(pts[:, k] for k in reversed(range(d))) + (sq,))
    chosen = pts[order[:g]].astype(float) * (radius / math.sqrt(r2))
    # boundary nodes can land a rounding error outside the ball
    norms = np.linalg.norm(chosen, axis=1)
    over = norms > radius
    chosen[over] *= (radius / norms[over])[:, None]
    return BallGrid(chosen, radius)


# ---------------------------------------------------------------------------
# file formats


def measure_from_dict(data: dict, normalize: bool = False) -> DiscreteMeasure:
    if "points" not in data:
        raise InvalidInput("measure JSON needs a 'points' field")
    pts = np.asarray(data["points"], dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if "dim" in data and pts.size and pts.shape[1] != int(data["dim"]):
        raise DimensionError(f"'dim' is {data['dim']} but points have {pts.shape[1]} coordinates")
    w = data.get("weights")
    if w is not None and normalize:
        w = np.asarray(w, dtype=float)
        w = w / w.sum()
    return DiscreteMeasure(pts, w)


def load_measure(path: str | Path, normalize: bool = True) -> DiscreteMeasure:
    """Read a measure from ``.json`` or ``.csv``.

    JSON: ``{"dim": d, "points": [[...], ...], "weights": [...]}`` with
    ``weights`` optional. CSV: one point per row; if a header row is present
    and its last field is ``weight``, the last column holds the masses.
    Weights are renormalised to sum to one when ``normalize`` is set.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: {exc}") from exc
        return measure_from_dict(data, normalize=normalize)
    return _measure_from_csv(text, normalize=normalize)


def _measure_from_csv(text: str, normalize: bool) -> DiscreteMeasure:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidInput("empty CSV measure file")
    has_weight = False
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        has_weight = header[-1] == "weight"
        rows = rows[1:]
    try:
        arr = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"non-numeric CSV entry: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidInput("CSV measure needs at least one row of equal length")
    if has_weight:
        w = arr[:, -1]
        if normalize:
            w = w / w.sum()
        return DiscreteMeasure(arr[:, :-1], w)
    return DiscreteMeasure(arr)


def save_measure(m: DiscreteMeasure, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(m.to_dict()))
        return
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{k}" for k in range(m.dim)] + ["weight"])
        for p, w in zip(m.points, m.weights):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(w))])
