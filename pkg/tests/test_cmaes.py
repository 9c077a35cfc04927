import numpy as np
import pytest

from infohop.cmaes import CMAES, minimize
from infohop.errors import DimensionError, ParameterError


def sphere(x):
    return float(np.sum(x * x))


class TestCMAES:
    def test_sphere_5d_converges(self):
        x, f, evals = minimize(sphere, np.full(5, 2.0), 1.0, budget=5000, seed=0)
        assert np.linalg.norm(x) < 1e-3
        assert evals <= 5000

    def test_default_popsize(self):
        es = CMAES(np.zeros(5), 1.0, seed=0)
        assert es.lam == 4 + int(3 * np.log(5))

    def test_shifted_quadratic(self):
        target = np.array([1.0, -2.0, 0.5])
        x, f, _ = minimize(lambda v: sphere(v - target), np.zeros(3), 0.5,
                           budget=4000, seed=1)
        assert np.allclose(x, target, atol=1e-4)

    def test_bounds_respected(self):
        lo, hi = np.full(3, -0.25), np.full(3, 0.25)
        es = CMAES(np.zeros(3), 0.5, seed=2, bounds=(lo, hi))
        for _ in range(5):
            xs = es.ask()
            assert np.all(xs >= lo) and np.all(xs <= hi)
            es.tell(xs, [sphere(x) for x in xs])

    def test_best_tracks_optimum_within_bounds(self):
        lo, hi = np.full(2, -1.0), np.full(2, 1.0)
        x, f, _ = minimize(lambda v: sphere(v - 5.0), np.zeros(2), 0.5,
                           budget=2000, seed=3, bounds=(lo, hi))
        assert np.allclose(x, [1.0, 1.0], atol=1e-6)  # clipped optimum corner

    def test_deterministic_given_seed(self):
        a = minimize(sphere, np.full(4, 1.0), 0.7, budget=600, seed=11)
        b = minimize(sphere, np.full(4, 1.0), 0.7, budget=600, seed=11)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1]

    def test_tell_shape_check(self):
        es = CMAES(np.zeros(2), 1.0, seed=0)
        with pytest.raises(DimensionError):
            es.tell(np.zeros((es.lam + 1, 2)), np.zeros(es.lam + 1))

    def test_budget_below_population_rejected(self):
        with pytest.raises(ParameterError):
            minimize(sphere, np.zeros(5), 1.0, budget=3, seed=0)

    def test_bad_sigma(self):
        with pytest.raises(ParameterError):
            CMAES(np.zeros(2), 0.0)
