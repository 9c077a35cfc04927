"""Covariance-matrix-adaptation evolution strategy (minimization).

Standard (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation and
rank-one plus rank-mu covariance updates; the default population size is
4 + floor(3 ln d). Box constraints, when given, are enforced by clipping
sampled candidates.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, ParameterError


class CMAES:
    def __init__(self, x0, sigma0: float, seed=0, popsize: int | None = None,
                 bounds: tuple | None = None):
        self.mean = np.asarray(x0, dtype=np.float64).copy()
        if self.mean.ndim != 1:
            raise DimensionError(f"x0 must be a vector, got shape {self.mean.shape}")
        if sigma0 <= 0.0:
            raise ParameterError(f"sigma0 must be > 0, got {sigma0}")
        n = self.mean.size
        self.n = n
        self.sigma = float(sigma0)
        self.rng = np.random.default_rng(seed)
        self.bounds = None
        if bounds is not None:
            lo = np.asarray(bounds[0], dtype=np.float64)
            hi = np.asarray(bounds[1], dtype=np.float64)
            if lo.shape != (n,) or hi.shape != (n,) or np.any(lo >= hi):
                raise ParameterError("bounds must be (low, high) vectors with low < high")
            self.bounds = (lo, hi)

        self.lam = popsize if popsize is not None else 4 + int(3 * np.log(n))
        if self.lam < 2:
            raise ParameterError(f"population size must be >= 2, got {self.lam}")
        self.mu = self.lam // 2
        w = np.log((self.lam + 1) / 2.0) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mu_eff = 1.0 / np.sum(self.weights ** 2)

        self.c_sigma = (self.mu_eff + 2.0) / (n + self.mu_eff + 5.0)
        self.d_sigma = 1.0 + 2.0 * max(0.0, np.sqrt((self.mu_eff - 1.0) / (n + 1.0)) - 1.0) + self.c_sigma
        self.c_c = (4.0 + self.mu_eff / n) / (n + 4.0 + 2.0 * self.mu_eff / n)
        self.c_1 = 2.0 / ((n + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(1.0 - self.c_1,
                        2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((n + 2.0) ** 2 + self.mu_eff))
        self.chi_n = np.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n ** 2))

        self.path_sigma = np.zeros(n)
        self.path_c = np.zeros(n)
        self.cov = np.eye(n)
        self._decompose()
        self.generation = 0
        self.evaluations = 0
        self.best_x = self.mean.copy()
        self.best_f = np.inf
        self._pending_z = None

    def _decompose(self):
        self.cov = (self.cov + self.cov.T) / 2.0
        vals, vecs = np.linalg.eigh(self.cov)
        self.eig_d = np.sqrt(np.maximum(vals, 1e-30))
        self.eig_b = vecs

    def ask(self) -> np.ndarray:
        """Sample one population of candidates, shape (popsize, n)."""
        z = self.rng.standard_normal((self.lam, self.n))
        y = (z * self.eig_d) @ self.eig_b.T
        x = self.mean + self.sigma * y
        if self.bounds is not None:
            x = np.clip(x, self.bounds[0], self.bounds[1])
        self._pending_z = None
        return x

    def tell(self, xs: np.ndarray, fitnesses) -> None:
        """Rank candidates by fitness (lower is better) and update the state."""
        xs = np.asarray(xs, dtype=np.float64)
        fit = np.asarray(fitnesses, dtype=np.float64)
        if xs.shape != (self.lam, self.n) or fit.shape != (self.lam,):
            raise DimensionError(
                f"expected {(self.lam, self.n)} candidates with {self.lam} fitnesses, "
                f"got {xs.shape} and {fit.shape}")
        self.evaluations += self.lam
        order = np.argsort(fit, kind="stable")
        if fit[order[0]] < self.best_f:
            self.best_f = float(fit[order[0]])
            self.best_x = xs[order[0]].copy()

        elite = xs[order[: self.mu]]
        old_mean = self.mean
        self.mean = self.weights @ elite
        shift = (self.mean - old_mean) / self.sigma

        inv_sqrt = self.eig_b @ np.diag(1.0 / self.eig_d) @ self.eig_b.T
        self.path_sigma = ((1.0 - self.c_sigma) * self.path_sigma
                           + np.sqrt(self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff)
                           * (inv_sqrt @ shift))
        self.generation += 1
        norm = np.linalg.norm(self.path_sigma)
        denom = np.sqrt(1.0 - (1.0 - self.c_sigma) ** (2.0 * self.generation))
        h_sigma = float(norm / denom / self.chi_n < 1.4 + 2.0 / (self.n + 1.0))
        self.path_c = ((1.0 - self.c_c) * self.path_c
                       + h_sigma * np.sqrt(self.c_c * (2.0 - self.c_c) * self.mu_eff) * shift)

        steps = (elite - old_mean) / self.sigma
        rank_mu = steps.T @ (self.weights[:, None] * steps)
        self.cov = ((1.0 - self.c_1 - self.c_mu) * self.cov
                    + self.c_1 * (np.outer(self.path_c, self.path_c)
                                  + (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c) * self.cov)
                    + self.c_mu * rank_mu)
        self.sigma = self.sigma * float(np.exp((self.c_sigma / self.d_sigma)
                                               * (norm / self.chi_n - 1.0)))
        self._decompose()


def minimize(fn, x0, sigma0: float, budget: int, seed=0, popsize: int | None = None,
             bounds: tuple | None = None, callback=None) -> tuple[np.ndarray, float, int]:
    """Run CMA-ES until the evaluation budget is spent; returns (x, f, evals)."""
    es = CMAES(x0, sigma0, seed=seed, popsize=popsize, bounds=bounds)
    if budget < es.lam:
        raise ParameterError(f"budget {budget} is below one population of {es.lam}")
    while es.evaluations + es.lam <= budget:
        xs = es.ask()
        fs = [float(fn(x)) for x in xs]
        es.tell(xs, fs)
        if callback is not None:
            callback(es, xs, fs)
    return es.best_x, es.best_f, es.evaluations
