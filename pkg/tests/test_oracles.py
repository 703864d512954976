import numpy as np
import pytest

from conftest import martingale_split, random_measure
from cvxorder.exceptions import DimensionError
from cvxorder.measures import DiscreteMeasure, make_example
from cvxorder.oracles import (
    MartingaleCoupling,
    MeanMismatch,
    QuantileViolation,
    decide,
    integrated_quantile_gap,
    martingale_feasibility,
    martingale_residuals,
    quantile_test,
)


def call_price_order(mu, nu, tol=1e-12):
    """1-D convex order through equal means and E(X-k)^+ <= E(Y-k)^+ at every
    atom k (call prices are piecewise linear in k between atoms)."""
    x, y = mu.points[:, 0], nu.points[:, 0]
    if abs(mu.weights @ x - nu.weights @ y) > tol:
        return False
    for k in np.concatenate([x, y]):
        if mu.weights @ np.maximum(x - k, 0) > nu.weights @ np.maximum(y - k, 0) + tol:
            return False
    return True


PAIR = DiscreteMeasure([-1.0, 1.0])
WIDE = DiscreteMeasure([-2.0, 2.0])


class TestQuantileTest:
    def test_ordered_pair(self):
        levels, gap = integrated_quantile_gap(PAIR, WIDE)
        np.testing.assert_allclose(levels, [0.5, 1.0])
        np.testing.assert_allclose(gap, [0.5, 0.0], atol=1e-15)
        assert quantile_test(PAIR, WIDE).ordered

    def test_equal(self, rng):
        m = random_measure(rng, 9, 1)
        _, gap = integrated_quantile_gap(m, m)
        assert np.all(gap == 0.0)
        assert quantile_test(m, m).ordered

    def test_violation(self):
        v = quantile_test(WIDE, PAIR)
        assert not v.ordered
        assert isinstance(v.certificate, QuantileViolation)
        assert v.certificate.x == 0.5 and v.certificate.integral == pytest.approx(-0.5)

    def test_mean_mismatch(self):
        v = quantile_test(DiscreteMeasure([0.0]), DiscreteMeasure([1.0]))
        assert not v.ordered and isinstance(v.certificate, MeanMismatch)

    def test_needs_1d(self):
        with pytest.raises(DimensionError):
            quantile_test(DiscreteMeasure([[0.0, 0.0]]), DiscreteMeasure([[0.0, 0.0]]))

    def test_matches_call_prices(self, rng):
        for _ in range(100):
            mu = DiscreteMeasure(rng.integers(-4, 5, 4).astype(float), rng.dirichlet(np.ones(4)))
            nu = martingale_split(rng, mu) if rng.random() < 0.5 else random_measure(rng, 5, 1)
            assert quantile_test(mu, nu).ordered == call_price_order(mu, nu, 1e-12)


class TestMartingaleFeasibility:
    def test_dirac_product_coupling(self):
        v = martingale_feasibility(DiscreteMeasure([0.0]), PAIR)
        assert v.ordered
        np.testing.assert_allclose(v.certificate.plan, [[0.5, 0.5]], atol=1e-9)

    def test_two_point(self):
        assert not martingale_feasibility(*make_example("two_point", 0.5)).ordered
        assert martingale_feasibility(*make_example("two_point", -0.5)).ordered

    def test_four_point(self):
        assert not martingale_feasibility(*make_example("four_point", 0.5)).ordered
        v = martingale_feasibility(*make_example("four_point", -0.5))
        assert v.ordered and isinstance(v.certificate, MartingaleCoupling)

    def test_mean_mismatch(self):
        v = martingale_feasibility(DiscreteMeasure([[0.0, 0.0]]), DiscreteMeasure([[1.0, 0.0]]))
        assert not v.ordered and isinstance(v.certificate, MeanMismatch)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            martingale_feasibility(PAIR, DiscreteMeasure([[0.0, 0.0]]))

    def test_returned_plans_verify(self, rng):
        for _ in range(20):
            d = rng.integers(1, 4)
            mu = random_measure(rng, rng.integers(1, 6), d)
            # split every atom along a random direction, keeping its barycentre
            pts, wts = [], []
            for x, w in zip(mu.points, mu.weights):
                e = rng.standard_normal(d)
                a, b = rng.uniform(0.2, 1.5, 2)
                pts += [x - a * e, x + b * e]
                wts += [w * b / (a + b), w * a / (a + b)]
            nu = DiscreteMeasure(np.array(pts), np.array(wts) / np.sum(wts))
            v = martingale_feasibility(mu, nu)
            assert v.ordered
            assert martingale_residuals(v.certificate.plan, mu, nu) <= 1e-8
            assert not martingale_feasibility(nu, mu).ordered

    def test_agrees_with_quantile_test(self, rng):
        for _ in range(40):
            mu = DiscreteMeasure(rng.standard_normal(4), rng.dirichlet(np.ones(4)))
            nu = martingale_split(rng, mu)
            if rng.random() < 0.5:
                mu, nu = nu, mu
            assert martingale_feasibility(mu, nu).ordered == quantile_test(mu, nu).ordered


def test_decide_dispatch(rng):
    assert decide(PAIR, WIDE).method == "quantile"
    assert decide(*make_example("four_point", 0.2)).method == "martingale"
    big = random_measure(rng, 300, 2)
    assert decide(big, big) is None
