import sys

import numpy as np
import pytest

from cvxorder.measures import DiscreteMeasure


def random_measure(rng, n, d, scale=1.0, uniform=False):
    pts = scale * rng.standard_normal((n, d))
    w = None if uniform else rng.dirichlet(np.ones(n))
    return DiscreteMeasure(pts, w)


def random_ball_measure(rng, n, d):
    pts = rng.standard_normal((n, d))
    pts *= (rng.uniform(0, 1, n) / np.linalg.norm(pts, axis=1))[:, None]
    return DiscreteMeasure(pts, rng.dirichlet(np.ones(n)))


def martingale_split(rng, mu):
    """nu obtained by splitting every atom of a 1-D mu into two atoms with the
    same barycentre; mu <=_c nu by construction."""
    pts, wts = [], []
    for x, w in zip(mu.points[:, 0], mu.weights):
        a, b = rng.uniform(0.1, 2.0, 2)
        pts += [x - a, x + b]
        wts += [w * b / (a + b), w * a / (a + b)]
    return DiscreteMeasure(np.array(pts), np.array(wts) / np.sum(wts))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.line(k, *acc.RESULTS[k]))
