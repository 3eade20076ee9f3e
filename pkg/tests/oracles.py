"""Independent reference computations for the marginal log-densities.

Each oracle integrates the latent variables out numerically (or, for the
Gaussian mixed model, uses the dense closed-form marginal) straight from the
hierarchical model statement, sharing no code with the package's marginal
formulas. Results are unnormalised log-densities: only differences between
parameter points are meaningful.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.special import gammaln

from marginal_mcmc.numkit import quad_1d


def log_integral(logf, lo, hi, mode):
    """log of the integral of exp(logf) over [lo, hi], scaled at ``mode``."""
    top = logf(np.array([mode]))[0]
    val = quad_1d(lambda x: np.exp(logf(x) - top), lo, hi, n=32, rtol=1e-13)
    return top + math.log(val)


def pump_oracle(beta, t, p, alpha, gamma, delta):
    total = stats.gamma.logpdf(beta, gamma, scale=1.0 / delta)
    for ti, pi in zip(t, p):
        shape, rate = pi + alpha, ti + beta
        mode = max((shape - 1) / rate, 1e-12)
        sd = math.sqrt(shape) / rate

        def logf(lam, ti=ti, pi=pi):
            lam = np.maximum(lam, 1e-300)
            mu = ti * lam
            return (pi * np.log(mu) - mu - gammaln(pi + 1)
                    + alpha * math.log(beta) - gammaln(alpha) + (alpha - 1) * np.log(lam) - beta * lam)

        total += log_integral(logf, 0.0, shape / rate + 80 * sd, mode)
    return total


def censored_oracle(mu, lam, y, n, a, mu0, k0, alpha, beta):
    sd = 1.0 / math.sqrt(lam)
    total = float(np.sum(stats.norm.logpdf(y, mu, sd)))
    if n > len(y):
        lo = a
        hi = max(a, mu) + 60 * sd
        tail = log_integral(lambda x: stats.norm.logpdf(x, mu, sd), lo, hi, max(a, mu))
        total += (n - len(y)) * tail
    total += stats.norm.logpdf(mu, mu0, 1.0 / math.sqrt(k0 * lam))
    total += stats.gamma.logpdf(lam, alpha, scale=1.0 / beta)
    return total


def dyes_oracle(theta, t_w, t_b, y, prior_logpdf):
    total = prior_logpdf(theta, t_w, t_b)
    sw, sb = 1.0 / math.sqrt(t_w), 1.0 / math.sqrt(t_b)
    for row in np.atleast_2d(y):
        v = row.size * t_w + t_b
        centre = (t_w * row.sum() + t_b * theta) / v
        half = 60.0 / math.sqrt(v)

        def logf(m, row=row):
            m = np.asarray(m, dtype=float)
            lik = np.sum(stats.norm.logpdf(row[None, :], m.reshape(-1, 1), sw), axis=1).reshape(m.shape)
            return lik + stats.norm.logpdf(m, theta, sb)

        total += log_integral(logf, centre - half, centre + half, centre)
    return total


def ratpup_dense_oracle(beta, s_eps, s_u, X, Z, y, a, b):
    cov = s_eps * np.eye(len(y)) + s_u * Z @ Z.T
    ll = stats.multivariate_normal.logpdf(y, X @ beta, cov)
    return ll - (b + 1.0) * math.log(s_eps) - (a + 1.0) * math.log(s_u)


def dense_W_terms(lam, X, Z, y):
    W = np.eye(len(y)) - Z @ np.linalg.solve(Z.T @ Z + lam * np.eye(Z.shape[1]), Z.T)
    g = np.linalg.slogdet(Z.T @ Z + lam * np.eye(Z.shape[1]))[1]
    return X.T @ W @ X, X.T @ W @ y, float(y @ W @ y), g
