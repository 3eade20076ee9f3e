"""Pump failures: Poisson counts with gamma rates and a gamma hyperprior on the rate parameter."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..core import sample_gamma
from ..errors import ZeroDensityPoint
from .base import ModelBundle, fixture_path


@dataclass(frozen=True)
class PumpData:
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("t and p must be vectors of equal length")
        if np.any(t <= 0) or np.any(p < 0) or np.any(p != np.round(p)):
            raise ValueError("need t > 0 and non-negative integer counts")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.t.size


@dataclass(frozen=True)
class PumpHyper:
    alpha: float = 1.8
    gamma: float = 0.01
    delta: float = 1.0

    def __post_init__(self):
        if min(self.alpha, self.gamma, self.delta) <= 0:
            raise ValueError("pump hyperparameters must be positive")


def load_pump(path=None) -> PumpData:
    path = path or fixture_path("pump.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return PumpData([float(r["t"]) for r in rows], [float(r["p"]) for r in rows])


def pump_log_marginal(beta: float, data: PumpData, h: PumpHyper) -> float:
    """log f(beta | p) up to a constant; O(n) since no fixed-size summary exists."""
    if not beta > 0:
        return -math.inf
    return ((data.n * h.alpha + h.gamma - 1.0) * math.log(beta) - h.delta * beta
            - float(np.dot(h.alpha + data.p, np.log(beta + data.t))))


def pump_sample_latent(beta: float, data: PumpData, h: PumpHyper, rng) -> np.ndarray:
    """Failure rates given beta: independent Ga(p_i + alpha, t_i + beta)."""
    lam = np.empty(data.n)
    shapes, times = (data.p + h.alpha).tolist(), data.t.tolist()
    for i in range(data.n):
        lam[i] = sample_gamma(shapes[i], times[i] + beta, rng)
    return lam


def pump_gibbs_sweep(state, data: PumpData, h: PumpHyper, rng):
    _, beta = state
    lam = np.empty(data.n)
    shapes, times = (data.p + h.alpha).tolist(), data.t.tolist()
    total = 0.0
    for i in range(data.n):
        v = sample_gamma(shapes[i], times[i] + beta, rng)
        lam[i] = v
        total += v
    beta = sample_gamma(data.n * h.alpha + h.gamma, h.delta + total, rng)
    return lam, beta


def _log_gamma_pdf(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def pump_one_block(beta: float, lam_star, data: PumpData, h: PumpHyper) -> float:
    """log f(p | lam*, beta) + log f(lam* | beta) - log f(lam* | p, beta)."""
    lam = np.asarray(lam_star, dtype=float)
    if lam.shape != data.t.shape or np.any(lam <= 0):
        raise ZeroDensityPoint("latent rates must be positive")
    mu = data.t * lam
    log_lik = np.sum(data.p * np.log(mu) - mu - gammaln(data.p + 1.0))
    log_prior = np.sum(_log_gamma_pdf(lam, h.alpha, beta))
    log_cond = np.sum(_log_gamma_pdf(lam, data.p + h.alpha, data.t + beta))
    return float(log_lik + log_prior - log_cond)


class PumpModel(ModelBundle):
    name = "pump"
    coord_labels = ("beta",)
    stat_labels = ("beta",)
    aims_bracket = (0.3, 8.0)

    def __init__(self, data: PumpData | None = None, hyper: PumpHyper | None = None):
        self.data = data if data is not None else load_pump()
        self.hyper = hyper or PumpHyper()
        self.latent_labels = tuple(f"lambda{i + 1}" for i in range(self.data.n))

    def log_marginal(self, coords):
        return pump_log_marginal(float(coords[0]), self.data, self.hyper)

    def log_marginal_scalar(self, beta: float) -> float:
        return pump_log_marginal(beta, self.data, self.hyper)

    def support(self):
        return np.array([0.0]), np.array([math.inf])

    def marginal_init(self):
        return np.array([1.0])

    def coords_to_stats(self, coords):
        return np.asarray(coords, dtype=float).reshape(-1, 1)

    def stats_to_hyper(self, stats):
        return (float(stats[0]),)

    def gibbs_init(self):
        return np.zeros(self.data.n), 1.0

    def gibbs_sweep(self, state, rng):
        return pump_gibbs_sweep(state, self.data, self.hyper, rng)

    def gibbs_stats(self, state):
        return (state[1],)

    def sample_latent(self, hyper, rng):
        return pump_sample_latent(hyper[0], self.data, self.hyper, rng)

    def one_block(self, hyper, x_star):
        return pump_one_block(hyper[0], x_star, self.data, self.hyper)
