"""Dyestuff one-way variance components model, marginalised over the batch means."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..core import sample_gamma
from ..errors import ZeroDensityPoint
from ..samplers import ExactBlock, MwgPlan, RwmBlock, RwmConfig
from .base import ModelBundle, fixture_path

W_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class DyesSuff:
    B: int
    S: int
    r1: float
    r2: float
    r3: float
    R2: float
    R3: float


def dyes_suffstat(y) -> DyesSuff:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or min(y.shape) < 1:
        raise ValueError("y must be a non-empty B x S matrix")
    B, S = y.shape
    z1 = y.mean(axis=1)
    r2 = float(y.mean())
    r1 = float(np.mean(z1 * z1))
    r3 = float(np.mean(y * y))
    # centred sums avoid the r1 - r2^2 cancellation at yields ~1500
    R2 = float(np.mean((z1 - r2) ** 2))
    R3 = float(np.mean((y - z1[:, None]) ** 2))
    return DyesSuff(B, S, r1, r2, r3, R2, R3)


def load_dyes(path=None) -> np.ndarray:
    path = path or fixture_path("dyes.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[float(r[f"y{j}"]) for j in range(1, 6)] for r in rows])


@dataclass(frozen=True)
class DyesPriors:
    """theta ~ N(m, 1/lam), t_w ~ Ga(a, b), t_b ~ Ga(c, d).

    Subclass and override ``log_density`` for non-conjugate hyperpriors;
    only the marginal target uses it, the conditional draws assume this form.
    """

    m: float = 0.0
    lam: float = 1e-10
    a: float = 1e-3
    b: float = 1e-3
    c: float = 1e-3
    d: float = 1e-3

    def log_density(self, theta: float, t_w: float, t_b: float) -> float:
        return (-0.5 * self.lam * (theta - self.m) ** 2
                + (self.a - 1.0) * math.log(t_w) - self.b * t_w
                + (self.c - 1.0) * math.log(t_b) - self.d * t_b)

    @property
    def conjugate(self) -> bool:
        return type(self).log_density is DyesPriors.log_density


def dyes_log_marginal_twb(theta, t_w, t_b, s: DyesSuff, priors: DyesPriors) -> float:
    if not (t_w > 0 and t_b > 0):
        return -math.inf
    B, S = s.B, s.S
    v = t_b + S * t_w
    # same function as the expanded form up to a constant, without its cancellation
    q = (theta - s.r2) ** 2 + s.R2
    log_lik = (0.5 * B * (S * math.log(t_w) + math.log(t_b) - math.log(v))
               - 0.5 * B * (S * t_w * s.R3 + S * t_w * t_b / v * q))
    return log_lik + priors.log_density(theta, t_w, t_b)


def dyes_transform(theta, t_w, t_b, S):
    x = S * t_w
    return theta, x, t_b / (t_b + x)


def dyes_untransform(theta, x, w, S):
    return theta, x / S, x * w / (1.0 - w)


def dyes_log_marginal_txw(theta, x, w, s: DyesSuff, priors: DyesPriors) -> float:
    """Density in (theta, x, w), including the Jacobian x / (S (1-w)^2)."""
    if not (x > 0 and 0 < w <= W_MAX):
        return -math.inf
    B, S = s.B, s.S
    q = (theta - s.r2) ** 2 + s.R2
    val = (0.5 * B * S * math.log(x) + 0.5 * B * math.log(w) - 2.0 * math.log1p(-w)
           - 0.5 * B * (s.R3 * x + q * x * w) + math.log(x) - math.log(S))
    return val + priors.log_density(theta, x / S, x * w / (1.0 - w))


def dyes_theta_draw(x, w, s: DyesSuff, p: DyesPriors, rng) -> float:
    prec = s.B * x * w + p.lam
    mean = s.r2 + p.lam * (p.m - s.r2) / prec
    return mean + rng.standard_normal() / math.sqrt(prec)


def dyes_x_draw(theta, w, s: DyesSuff, p: DyesPriors, rng) -> float:
    q = (theta - s.r2) ** 2 + s.R2
    rate = 0.5 * s.B * s.R3 + 0.5 * s.B * w * q + p.b / s.S + p.d * w / (1.0 - w)
    return sample_gamma(0.5 * s.B * s.S + p.a + p.c, rate, rng)


def dyes_w_log_conditional(w, theta, x, s: DyesSuff, p: DyesPriors) -> float:
    if not 0 < w <= W_MAX:
        return -math.inf
    b1 = s.B / 2.0 + p.c - 1.0
    b2 = p.c + 1.0
    b3 = s.B * x * ((theta - s.r2) ** 2 + s.R2) / 2.0
    return b1 * math.log(w) - b2 * math.log1p(-w) - b3 * w - p.d * x * w / (1.0 - w)


def dyes_mwg_plan(s: DyesSuff, p: DyesPriors, step: float, iterations: int = 5) -> MwgPlan:
    """Exact theta, exact x, then ``iterations`` RWM steps on w; state is (theta, x, w)."""
    if not p.conjugate:
        raise ValueError("the tailor-made sampler needs the conjugate hyperpriors")
    blocks = [
        ExactBlock("theta", [0], lambda st, rng: dyes_theta_draw(st[1], st[2], s, p, rng)),
        ExactBlock("x", [1], lambda st, rng: dyes_x_draw(st[0], st[2], s, p, rng)),
        RwmBlock("w", [2], lambda st: dyes_w_log_conditional(st[2], st[0], st[1], s, p),
                 RwmConfig(step, iterations), lower=0.0, upper=1.0),
    ]
    return MwgPlan(blocks, 3, ("theta", "x", "w"))


def dyes_gibbs_sweep(state, y_means, s: DyesSuff, p: DyesPriors, rng):
    """mu_i one at a time, then theta, t_w, t_b from their full conditionals."""
    _, theta, t_w, t_b = state
    B, S = s.B, s.S
    v = S * t_w + t_b
    sd = 1.0 / math.sqrt(v)
    a_w, a_b = S * t_w / v, t_b * theta / v
    K = s.r2   # shift keeps the running sums of squares well conditioned
    mu = np.empty(B)
    sum_k = sum_k2 = dev2 = 0.0
    normal = rng.standard_normal
    for i in range(B):
        m_i = a_w * y_means[i] + a_b + sd * normal()
        mu[i] = m_i
        e = m_i - K
        sum_k += e
        sum_k2 += e * e
        e = m_i - y_means[i]
        dev2 += e * e
    mbar = K + sum_k / B
    prec = B * t_b + p.lam
    theta = mbar + p.lam * (p.m - mbar) / prec + normal() / math.sqrt(prec)
    t_w = sample_gamma(0.5 * B * S + p.a, 0.5 * S * dev2 + 0.5 * B * S * s.R3 + p.b, rng)
    tk = theta - K
    ss_theta = max(sum_k2 - 2.0 * tk * sum_k + B * tk * tk, 0.0)
    t_b = sample_gamma(0.5 * B + p.c, 0.5 * ss_theta + p.d, rng)
    return mu, theta, t_w, t_b


def dyes_sample_latent(theta, t_w, t_b, y_means, S, rng) -> np.ndarray:
    v = S * t_w + t_b
    sd = 1.0 / math.sqrt(v)
    mu = np.empty(len(y_means))
    for i in range(len(y_means)):
        mu[i] = (S * t_w * y_means[i] + t_b * theta) / v + sd * rng.standard_normal()
    return mu


def dyes_generate_batches(theta, t_w, t_b, B, S, rng) -> np.ndarray:
    mu = theta + rng.standard_normal(B) / math.sqrt(t_b)
    return mu[:, None] + rng.standard_normal((B, S)) / math.sqrt(t_w)


def dyes_one_block(theta, t_w, t_b, mu_star, y) -> float:
    """log f(y|mu*) + log f(mu*|theta, t_b) - log f(mu*|y, theta, t_w, t_b)."""
    mu = np.asarray(mu_star, dtype=float).ravel()
    B, S = y.shape
    if mu.size != B or not np.all(np.isfinite(mu)):
        raise ZeroDensityPoint("need one finite mean per batch")
    half_log_2pi = 0.5 * math.log(2 * math.pi)
    lik = B * S * (0.5 * math.log(t_w) - half_log_2pi) - 0.5 * t_w * float(np.sum((y - mu[:, None]) ** 2))
    prior = B * (0.5 * math.log(t_b) - half_log_2pi) - 0.5 * t_b * float(np.sum((mu - theta) ** 2))
    v = S * t_w + t_b
    cmean = (S * t_w * y.mean(axis=1) + t_b * theta) / v
    cond = B * (0.5 * math.log(v) - half_log_2pi) - 0.5 * v * float(np.sum((mu - cmean) ** 2))
    return lik + prior - cond


class DyesModel(ModelBundle):
    name = "dyes"
    coord_labels = ("theta", "x", "w")
    stat_labels = ("theta", "s_w", "s_b")
    mwg_tuned_coord = "w"
    mwg_default_step = 0.1

    def __init__(self, y=None, priors: DyesPriors | None = None):
        self.y = np.asarray(y, dtype=float) if y is not None else load_dyes()
        self.suff = dyes_suffstat(self.y)
        self.y_means = self.y.mean(axis=1).tolist()
        self.priors = priors or DyesPriors()
        self.latent_labels = tuple(f"mu{i + 1}" for i in range(self.suff.B))

    @classmethod
    def synthetic(cls, B: int, rng, theta=1527.0, t_w=1 / 3002.0, t_b=1 / 2264.0, priors=None):
        """Genuine batches topped up with generated ones to B in total."""
        y = load_dyes()
        if B > y.shape[0]:
            y = np.vstack([y, dyes_generate_batches(theta, t_w, t_b, B - y.shape[0], y.shape[1], rng)])
        else:
            y = y[:B]
        return cls(y, priors)

    def log_marginal(self, coords):
        return dyes_log_marginal_txw(float(coords[0]), float(coords[1]), float(coords[2]),
                                     self.suff, self.priors)

    def support(self):
        return np.array([-math.inf, 0.0, 0.0]), np.array([math.inf, math.inf, 1.0])

    def marginal_init(self):
        return np.array(dyes_transform(1500.0, 1.0, 1.0, self.suff.S))

    def marginal_init_pair(self):
        x = self.marginal_init()
        return x, np.array([x[0] + 10.0, x[1] * 0.8, x[2] * 1.2])

    def coords_to_stats(self, coords):
        c = np.asarray(coords, dtype=float).reshape(-1, 3)
        _, t_w, t_b = dyes_untransform(c[:, 0], c[:, 1], c[:, 2], self.suff.S)
        return np.column_stack([c[:, 0], 1.0 / t_w, 1.0 / t_b])

    def stats_to_hyper(self, stats):
        return float(stats[0]), 1.0 / float(stats[1]), 1.0 / float(stats[2])

    def gibbs_init(self):
        return np.zeros(self.suff.B), 1500.0, 1.0, 1.0

    def gibbs_sweep(self, state, rng):
        return dyes_gibbs_sweep(state, self.y_means, self.suff, self.priors, rng)

    def gibbs_stats(self, state):
        return state[1], 1.0 / state[2], 1.0 / state[3]

    def sample_latent(self, hyper, rng):
        theta, t_w, t_b = hyper
        return dyes_sample_latent(theta, t_w, t_b, self.y_means, self.suff.S, rng)

    def one_block(self, hyper, x_star):
        theta, t_w, t_b = hyper
        return dyes_one_block(theta, t_w, t_b, x_star, self.y)

    def mwg_plan(self, step):
        return dyes_mwg_plan(self.suff, self.priors, step)
