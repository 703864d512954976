import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvxorder.exceptions import DimensionError, InvalidInput
from cvxorder.measures import (
    DiscreteMeasure,
    ball_grid,
    from_samples,
    load_measure,
    make_example,
    mean,
    quantile,
    save_measure,
    second_moment,
)


def brute_quantile(points, weights, u):
    # inf{y : F(y) >= u}, straight from the definition
    best = np.inf
    for y in points:
        if weights[points <= y].sum() >= u - 1e-12:
            best = min(best, y)
    return best


class TestDiscreteMeasure:
    def test_uniform_default(self):
        m = DiscreteMeasure([[0.0], [1.0], [2.0]])
        np.testing.assert_allclose(m.weights, [1 / 3] * 3)
        assert m.dim == 1 and m.size == 3

    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidInput):
            DiscreteMeasure([0.0, 1.0], [0.6, 0.6])
        with pytest.raises(InvalidInput):
            DiscreteMeasure([0.0, 1.0], [1.5, -0.5])
        with pytest.raises(InvalidInput):
            DiscreteMeasure([0.0, 1.0], [1.0])

    def test_rejects_nonfinite_points(self):
        with pytest.raises(InvalidInput):
            DiscreteMeasure([0.0, np.nan])
        with pytest.raises(InvalidInput):
            DiscreteMeasure(np.zeros((0, 2)))

    def test_immutable(self):
        m = DiscreteMeasure([0.0, 1.0])
        with pytest.raises(ValueError):
            m.points[0, 0] = 5.0


class TestFromSamples:
    def test_single_atom(self):
        m = from_samples([[0.0]])
        assert m.points.tolist() == [[0.0]] and m.weights.tolist() == [1.0]

    def test_two_atoms(self):
        assert from_samples([[-1.0], [1.0]]).weights.tolist() == [0.5, 0.5]

    def test_duplicates_kept(self):
        m = from_samples([1.0, 1.0, 2.0])
        assert m.size == 3

    def test_empty(self):
        with pytest.raises(InvalidInput):
            from_samples([])

    def test_gaussian_mean(self):
        z = np.random.default_rng(0).standard_normal(500)
        m = from_samples(z)
        assert abs(mean(m)[0]) <= 3 / np.sqrt(500)
        assert mean(m)[0] == pytest.approx(z.sum() / 500, abs=1e-15)


class TestQuantile:
    def test_two_point(self):
        m = DiscreteMeasure([-1.0, 1.0])
        assert quantile(m, 0.5) == -1.0
        assert quantile(m, 0.51) == 1.0

    def test_unequal_weights(self):
        m = DiscreteMeasure([0.0, 2.0], [0.25, 0.75])
        assert quantile(m, 0.25) == brute_quantile(np.array([0.0, 2.0]), np.array([0.25, 0.75]), 0.25) == 0.0
        assert quantile(m, 0.26) == 2.0
        assert quantile(m, 1.0) == 2.0

    def test_unsorted_input(self):
        m = DiscreteMeasure([3.0, -1.0, 0.0], [0.2, 0.5, 0.3])
        assert quantile(m, 0.5) == -1.0
        assert quantile(m, 0.8) == 0.0
        assert quantile(m, 0.81) == 3.0

    def test_errors(self):
        m = DiscreteMeasure([0.0, 1.0])
        for u in (0.0, -0.1, 1.1):
            with pytest.raises(InvalidInput):
                quantile(m, u)
        with pytest.raises(DimensionError):
            quantile(DiscreteMeasure([[0.0, 0.0]]), 0.5)

    def test_against_definition(self, rng):
        for _ in range(50):
            n = rng.integers(1, 8)
            pts = rng.integers(-5, 5, n).astype(float)
            w = rng.dirichlet(np.ones(n))
            m = DiscreteMeasure(pts, w)
            for u in rng.uniform(0.001, 1.0, 10):
                assert quantile(m, u) == brute_quantile(pts, w, u)

    def test_monotone(self, rng):
        for _ in range(10):
            n = rng.integers(1, 20)
            m = DiscreteMeasure(rng.standard_normal(n), rng.dirichlet(np.ones(n)))
            u = np.sort(rng.uniform(1e-9, 1, (100, 2)), axis=1)
            for u1, u2 in u:
                assert quantile(m, u1) <= quantile(m, u2)


class TestMoments:
    def test_dirac(self):
        m = DiscreteMeasure([[0.0, 0.0]])
        assert mean(m).tolist() == [0.0, 0.0] and second_moment(m) == 0.0

    def test_symmetric_pair(self):
        m = DiscreteMeasure([-1.0, 1.0])
        assert mean(m)[0] == 0.0 and second_moment(m) == 1.0

    def test_four_point(self):
        m = DiscreteMeasure([[-2, 0], [2, 0], [0, 2], [0, -2]])
        assert second_moment(m) == 4.0

    def test_roundtrip_uniform(self, rng):
        m = DiscreteMeasure(rng.standard_normal((16, 3)))
        r = from_samples(m.points)
        np.testing.assert_array_equal(mean(r), mean(m))
        assert second_moment(r) == second_moment(m)


class TestExamples:
    def test_two_point_zero(self):
        mu, nu = make_example("two_point", 0.0)
        np.testing.assert_array_equal(mu.points, nu.points)
        np.testing.assert_array_equal(mu.weights, [0.5, 0.5])

    def test_four_point_collapse(self):
        mu, nu = make_example("four_point", -1.0)
        np.testing.assert_array_equal(mu.points, 0.0)
        assert mu.dim == 2 and nu.dim == 2

    def test_gauss_same_law(self):
        mu, nu = make_example("gauss_sampled", 1.0, n=400, seed=7)
        assert np.all(np.abs(mean(mu)) <= 3 / np.sqrt(400))
        assert np.all(np.abs(mean(nu)) <= 3 / np.sqrt(400))

    def test_gauss_independent_draws(self):
        mu, nu = make_example("gauss_sampled", 1.0, n=400, seed=7, coupled=False)
        assert not np.array_equal(mu.points, nu.points)
        assert np.all(np.abs(mean(mu)) <= 3 / np.sqrt(400))

    def test_gauss_deterministic(self):
        a = make_example("gauss_sampled", 0.5, n=50, seed=3, d=2)
        b = make_example("gauss_sampled", 0.5, n=50, seed=3, d=2)
        np.testing.assert_array_equal(a[0].points, b[0].points)
        assert a[0].dim == 2

    @pytest.mark.parametrize("family,param", [("two_point", 1.5), ("four_point", -2.0), ("gauss_sampled", -0.1), ("nope", 0)])
    def test_out_of_range(self, family, param):
        with pytest.raises(InvalidInput):
            make_example(family, param)

    @given(st.floats(-1, 1))
    def test_two_point_mean_zero(self, s):
        mu, nu = make_example("two_point", s)
        assert mean(mu)[0] == 0.0 and mean(nu)[0] == 0.0


class TestBallGrid:
    def test_1d(self):
        assert ball_grid(1, 3).nodes[:, 0].tolist() == [-1.0, 0.0, 1.0]
        assert ball_grid(1, 5).nodes[:, 0].tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]

    def test_2d_five(self):
        grid = ball_grid(2, 5)
        assert grid.size == 5
        assert np.all(np.linalg.norm(grid.nodes, axis=1) <= 1.0)
        # origin plus the four unit axis points
        assert sorted(map(tuple, grid.nodes.tolist())) == [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]

    def test_too_small(self):
        with pytest.raises(InvalidInput):
            ball_grid(2, 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(2, 60), st.floats(0.1, 5.0))
    def test_nodes_in_ball(self, d, g, radius):
        grid = ball_grid(d, g, radius)
        assert grid.size == g and grid.dim == d
        assert np.all(np.linalg.norm(grid.nodes, axis=1) <= radius + 1e-12)
        assert len(np.unique(grid.nodes, axis=0)) == g


class TestFiles:
    def test_json_roundtrip(self, tmp_path, rng):
        m = DiscreteMeasure(rng.standard_normal((5, 2)), rng.dirichlet(np.ones(5)))
        save_measure(m, tmp_path / "m.json")
        r = load_measure(tmp_path / "m.json")
        np.testing.assert_array_equal(r.points, m.points)
        np.testing.assert_allclose(r.weights, m.weights, atol=1e-15)

    def test_json_without_weights(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"dim": 1, "points": [[0], [1], [2], [3]]}))
        assert load_measure(tmp_path / "m.json").weights.tolist() == [0.25] * 4

    def test_json_dim_mismatch(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"dim": 2, "points": [[0], [1]]}))
        with pytest.raises(DimensionError):
            load_measure(tmp_path / "m.json")

    def test_csv_with_weight_column(self, tmp_path):
        (tmp_path / "m.csv").write_text("x,y,weight\n0,0,1\n1,1,3\n")
        m = load_measure(tmp_path / "m.csv")
        assert m.dim == 2 and m.weights.tolist() == [0.25, 0.75]

    def test_csv_plain(self, tmp_path):
        (tmp_path / "m.csv").write_text("1.0\n2.0\n")
        m = load_measure(tmp_path / "m.csv")
        assert m.dim == 1 and m.weights.tolist() == [0.5, 0.5]

    def test_csv_roundtrip(self, tmp_path, rng):
        m = DiscreteMeasure(rng.standard_normal((4, 3)), rng.dirichlet(np.ones(4)))
        save_measure(m, tmp_path / "m.csv")
        r = load_measure(tmp_path / "m.csv")
        np.testing.assert_array_equal(r.points, m.points)
        np.testing.assert_allclose(r.weights, m.weights, atol=1e-15)

    def test_bad_csv(self, tmp_path):
        (tmp_path / "m.csv").write_text("a,b\n1,zz\n")
        with pytest.raises(InvalidInput):
            load_measure(tmp_path / "m.csv")
