import math

import numpy as np
import pytest
from scipy import stats

from marginal_mcmc.core import make_rng
from marginal_mcmc.errors import ZeroDensityPoint
from marginal_mcmc.models.pump import (PumpData, PumpHyper, PumpModel, load_pump, pump_gibbs_sweep,
                                       pump_log_marginal, pump_one_block, pump_sample_latent)
from marginal_mcmc.samplers import gibbs_run
from oracles import pump_oracle

H = PumpHyper()


def test_fixture():
    d = load_pump()
    assert d.n == 10 and d.t[0] == 94.32 and d.p.sum() == 75


def test_data_validation():
    with pytest.raises(ValueError):
        PumpData([1.0, -1.0], [1, 2])
    with pytest.raises(ValueError):
        PumpData([1.0], [0.5])
    with pytest.raises(ValueError):
        PumpHyper(alpha=0)


def test_no_pumps_gives_prior():
    d = PumpData(np.array([]), np.array([]))
    diff = pump_log_marginal(2.5, d, H) - pump_log_marginal(0.7, d, H)
    ref = stats.gamma.logpdf(2.5, H.gamma, scale=1 / H.delta) - stats.gamma.logpdf(0.7, H.gamma, scale=1 / H.delta)
    assert diff == pytest.approx(ref, abs=1e-12)


def test_ratio_against_quadrature():
    d = load_pump()
    got = pump_log_marginal(2.5, d, H) - pump_log_marginal(2.0, d, H)
    ref = pump_oracle(2.5, d.t, d.p, H.alpha, H.gamma, H.delta) - pump_oracle(2.0, d.t, d.p, H.alpha, H.gamma, H.delta)
    assert abs(math.expm1(got - ref)) < 1e-8


def test_tail_and_support():
    d = load_pump()
    assert pump_log_marginal(1e4, d, H) < pump_log_marginal(10.0, d, H) - 1000
    assert pump_log_marginal(0.0, d, H) == -math.inf


def test_latent_conditional_mean():
    d = load_pump()
    rng = make_rng(1)
    lam1 = np.array([pump_sample_latent(2.5, d, H, rng)[0] for _ in range(20_000)])
    mean = (5 + 1.8) / (94.32 + 2.5)
    assert mean == pytest.approx(0.07024, abs=1e-5)  # quoted value is rounded up from 0.070233
    assert abs(lam1.mean() - mean) < 5 * math.sqrt(6.8) / 96.82 / math.sqrt(lam1.size)


def test_empty_latent():
    assert pump_sample_latent(1.0, PumpData(np.array([]), np.array([])), H, make_rng(0)).size == 0


def test_gibbs_posterior_mean():
    d = load_pump()
    ch = gibbs_run(lambda s, r: pump_gibbs_sweep(s, d, H, r), (np.ones(10), 1.0), 100_000, make_rng(2),
                   lambda s: (s[1],), ("beta",), burn=100)
    assert ch.samples.mean() == pytest.approx(2.464, abs=0.03)


def test_large_exposure_limit_shrinks_latent_variance():
    rng = make_rng(3)
    sds = []
    for t in (1e1, 1e3, 1e5):
        d = PumpData(np.array([t]), np.array([5.0]))
        draws = [pump_sample_latent(1.0, d, H, rng)[0] for _ in range(2000)]
        sds.append(np.std(draws) * t)
    # t * lambda concentrates like a Ga(p + alpha, 1) variable
    assert sds[-1] == pytest.approx(math.sqrt(6.8), rel=0.1)


def test_one_block_constant_in_latent():
    m = PumpModel()
    rng = make_rng(4)
    vals = [m.one_block((2.2,), rng.gamma(2.0, 0.5, 10)) for _ in range(20)]
    assert max(vals) - min(vals) < 1e-10
    # equals the marginal likelihood part of the marginal density, up to a constant
    other = [m.one_block((b,), rng.gamma(2.0, 0.5, 10)) for b in (1.0, 3.0)]
    prior = lambda b: stats.gamma.logpdf(b, H.gamma, scale=1 / H.delta)
    lm = lambda b: pump_log_marginal(b, m.data, H)
    assert other[1] - other[0] == pytest.approx(lm(3.0) - prior(3.0) - lm(1.0) + prior(1.0), abs=1e-9)


def test_one_block_rejects_outside_support():
    with pytest.raises(ZeroDensityPoint):
        pump_one_block(1.0, -np.ones(10), load_pump(), H)
