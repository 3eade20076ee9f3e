"""Right-censored Gaussian data with a normal-gamma prior on (mu, lambda)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import log_normal_sf, sample_gamma, sample_trunc_normal_lower
from ..errors import CensoredAboveThreshold, NumericalError, ZeroDensityPoint
from .base import ModelBundle


@dataclass(frozen=True)
class CensoredSuff:
    m: int
    n: int
    sum_y: float
    sum_y2: float
    a: float
    # centred sum of squares, kept for a cancellation-free beta1
    ss: float = 0.0

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"need 0 <= m <= n, got m={self.m}, n={self.n}")


def censored_suffstat(y_uncensored, n_total: int, a: float) -> CensoredSuff:
    y = np.asarray(y_uncensored, dtype=float).ravel()
    if np.any(y >= a):
        raise CensoredAboveThreshold(f"{int(np.sum(y >= a))} uncensored values at or above a={a}")
    m = y.size
    ss = float(np.sum((y - y.mean()) ** 2)) if m else 0.0
    return CensoredSuff(m, int(n_total), float(y.sum()), float(np.dot(y, y)), float(a), ss)


@dataclass(frozen=True)
class CensoredHyper:
    mu0: float = 0.0
    k0: float = 1.0
    alpha: float = 1.0
    beta: float = 0.1

    def __post_init__(self):
        if not (self.k0 > 0 and self.alpha > 0 and self.beta > 0):
            raise ValueError("k0, alpha, beta must be positive")


@dataclass(frozen=True)
class CensoredPosteriorParams:
    """Normal-gamma parameters after absorbing the uncensored observations."""

    alpha1: float
    k1: float
    mu1: float
    beta1: float
    h: CensoredHyper = field(repr=False)


def censored_params(s: CensoredSuff, h: CensoredHyper) -> CensoredPosteriorParams:
    k1 = h.k0 + s.m
    mu1 = (h.k0 * h.mu0 + s.sum_y) / k1
    if s.m:
        ybar = s.sum_y / s.m
        beta1 = h.beta + 0.5 * (s.ss + h.k0 * s.m / k1 * (ybar - h.mu0) ** 2)
    else:
        beta1 = h.beta
    return CensoredPosteriorParams(h.alpha + s.m / 2.0, k1, mu1, beta1, h)


def censored_log_marginal(mu: float, lam: float, s: CensoredSuff, h: CensoredHyper,
                          params: CensoredPosteriorParams | None = None) -> float:
    if not lam > 0:
        return -math.inf
    p = params or censored_params(s, h)
    val = (p.alpha1 - 0.5) * math.log(lam) - lam * (0.5 * p.k1 * (mu - p.mu1) ** 2 + p.beta1)
    if s.n > s.m:
        val += (s.n - s.m) * log_normal_sf(math.sqrt(lam) * (s.a - mu))
    return val


def censored_generate(mu: float, lam: float, a: float, n: int, rng):
    """n draws from N(mu, 1/lam); values >= a are kept only as a count."""
    y = mu + rng.standard_normal(n) / math.sqrt(lam)
    return y[y < a], n


def censored_gibbs_sweep(state, s: CensoredSuff, h: CensoredHyper, rng):
    """Normal-gamma block draw of (mu, lambda), then one truncated normal per censored value."""
    sx, sx2 = _censored_sums(state)
    n = s.n
    k2 = h.k0 + n
    tot = s.sum_y + sx
    mu2 = (h.k0 * h.mu0 + tot) / k2
    # centred form of beta + (k0 mu0^2 - k2 mu2^2 + sum y^2 + sum x^2)/2
    mean = tot / n if n else 0.0
    ss = s.sum_y2 + sx2 - n * mean * mean
    beta2 = h.beta + 0.5 * (max(ss, 0.0) + h.k0 * n / k2 * (mean - h.mu0) ** 2)
    if not beta2 > 0:
        raise NumericalError(f"beta2 = {beta2} is not positive")
    lam = sample_gamma(h.alpha + n / 2.0, beta2, rng)
    mu = mu2 + rng.standard_normal() / math.sqrt(k2 * lam)
    x = censored_sample_latent(mu, lam, s, rng)
    return mu, lam, x


def _censored_sums(state):
    x = state[2]
    return float(x.sum()), float(x @ x)


def censored_sample_latent(mu: float, lam: float, s: CensoredSuff, rng) -> np.ndarray:
    sd = 1.0 / math.sqrt(lam)
    x = np.empty(s.n - s.m)
    for i in range(x.size):
        x[i] = sample_trunc_normal_lower(mu, sd, s.a, rng)
    return x


def censored_one_block(mu: float, lam: float, x_star, s: CensoredSuff) -> float:
    """Likelihood of the data with mu, lambda fixed, via the censored values x*.

    ``f(y, x*|mu, lam) / f(x*|y, mu, lam)``; the Gaussian kernels of the
    latent values cancel and the tail normaliser is left behind.
    """
    x = np.asarray(x_star, dtype=float).ravel()
    if x.size != s.n - s.m or np.any(x < s.a):
        raise ZeroDensityPoint("censored values must number n - m and lie at or above a")
    c = -0.5 * math.log(2 * math.pi) + 0.5 * math.log(lam)
    z = math.sqrt(lam) * (s.a - mu)
    logsf = log_normal_sf(z)
    lik_y = s.m * c - 0.5 * lam * (s.sum_y2 - 2 * mu * s.sum_y + s.m * mu * mu)
    dev = x - mu
    log_joint_x = np.sum(c - 0.5 * lam * dev * dev)
    log_cond_x = np.sum(c - 0.5 * lam * dev * dev - logsf)
    return float(lik_y + log_joint_x - log_cond_x)


class CensoredModel(ModelBundle):
    name = "censored"
    coord_labels = ("mu", "lambda")
    stat_labels = ("mu", "lambda")

    def __init__(self, suff: CensoredSuff, hyper: CensoredHyper | None = None):
        self.suff = suff
        self.hyper = hyper or CensoredHyper()
        self.params = censored_params(suff, self.hyper)
        self.latent_labels = tuple(f"x{i + 1}" for i in range(suff.n - suff.m))

    @classmethod
    def from_data(cls, y_uncensored, n_total, a, hyper=None):
        return cls(censored_suffstat(y_uncensored, n_total, a), hyper)

    @classmethod
    def synthetic(cls, n: int, rng, mu=2.0, lam=1.0, a=3.0, hyper=None):
        y, n = censored_generate(mu, lam, a, n, rng)
        return cls.from_data(y, n, a, hyper)

    def log_marginal(self, coords):
        return censored_log_marginal(float(coords[0]), float(coords[1]), self.suff, self.hyper, self.params)

    def support(self):
        return np.array([-math.inf, 0.0]), np.array([math.inf, math.inf])

    def marginal_init(self):
        s = self.suff
        if s.m >= 2:
            mean = s.sum_y / s.m
            return np.array([mean, s.m / max(s.ss, 1e-12)])
        return np.array([self.params.mu1, self.params.alpha1 / self.params.beta1])

    def marginal_init_pair(self):
        x = self.marginal_init()
        return x, np.array([x[0] + 0.05, x[1] * 1.05])

    def coords_to_stats(self, coords):
        return np.asarray(coords, dtype=float).reshape(-1, 2)

    def stats_to_hyper(self, stats):
        return float(stats[0]), float(stats[1])

    def gibbs_init(self):
        mu, lam = self.marginal_init()
        return mu, lam, np.full(self.suff.n - self.suff.m, self.suff.a + 1.0 / math.sqrt(lam))

    def gibbs_sweep(self, state, rng):
        return censored_gibbs_sweep(state, self.suff, self.hyper, rng)

    def gibbs_stats(self, state):
        return state[0], state[1]

    def sample_latent(self, hyper, rng):
        return censored_sample_latent(hyper[0], hyper[1], self.suff, rng)

    def one_block(self, hyper, x_star):
        return censored_one_block(hyper[0], hyper[1], x_star, self.suff)
