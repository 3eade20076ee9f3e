"""General-purpose MCMC kernels over a :class:`~marginal_mcmc.core.TargetDensity`.

Every runner takes ``burn`` extra leading iterations that are discarded and
excluded from ``Chain.wall_seconds``; acceptance counts likewise cover only
the retained iterations.
"""
from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Chain, TargetDensity
from .errors import BadInit, DegenerateChain, IdenticalPair, InvalidParameter, UnboundedTarget

__all__ = [
    "RwmConfig", "AmConfig", "TwalkConfig", "ExactBlock", "RwmBlock", "MwgPlan",
    "rwm_run", "am_run", "twalk_run", "aims_run", "mwg_sweep", "mwg_run", "gibbs_run",
    "tune_rwm_sd",
]


def _check_init(target: TargetDensity, x: np.ndarray) -> float:
    if x.shape != (target.dim,):
        raise BadInit(f"initial point has shape {x.shape}, target dimension is {target.dim}")
    if not target.in_support(x):
        raise BadInit("initial point outside the support")
    lp = target(x)
    if not math.isfinite(lp):
        raise BadInit("log-density is -inf at the initial point")
    return lp


# ---------------------------------------------------------------------------
# random-walk Metropolis


@dataclass
class RwmConfig:
    """Gaussian random-walk step sizes; ``iterations_per_block`` is used by MwG."""

    step_sd: float | Sequence[float] = 1.0
    iterations_per_block: int = 1

    def __post_init__(self):
        if np.any(np.asarray(self.step_sd, dtype=float) <= 0):
            raise InvalidParameter("step_sd must be positive")
        if self.iterations_per_block < 1:
            raise InvalidParameter("iterations_per_block must be >= 1")


def rwm_run(target: TargetDensity, init, n: int, cfg: RwmConfig, rng: np.random.Generator,
            burn: int = 0) -> Chain:
    x = np.array(init, dtype=float).reshape(-1)
    lp = _check_init(target, x)
    d = target.dim
    step = np.broadcast_to(np.asarray(cfg.step_sd, dtype=float), (d,)).copy()
    out = np.empty((n, d))
    lt = np.empty(n)
    acc = 0
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            acc = 0
            t0 = time.perf_counter()
        y = x + step * rng.standard_normal(d)
        # out-of-support proposals are rejected without touching the target
        if target.in_support(y):
            ly = target(y)
            if math.log(rng.random()) < ly - lp:
                x, lp = y, ly
                acc += 1
        if it >= burn:
            out[it - burn] = x
            lt[it - burn] = lp
    wall = time.perf_counter() - t0
    return Chain(out, target.labels, wall_seconds=wall, accepted={"rwm": acc}, proposed={"rwm": n},
                 eval_count=target.eval_count, log_target=lt)


# ---------------------------------------------------------------------------
# adaptive Metropolis


@dataclass
class AmConfig:
    """Adaptive Metropolis settings.

    Defaults are filled in per target dimension by :meth:`resolved`:
    adaptation starts after ``10 * dim`` states, the sample covariance is
    scaled by ``2.38**2 / dim`` and regularised by
    ``1e-10 * trace(initial_cov) / dim`` times the identity. Set
    ``adaptation_start=math.inf`` to get plain RWM with ``initial_cov``.
    """

    initial_cov: np.ndarray
    adaptation_start: float | None = None
    scale: float | None = None
    regularization: float | None = None

    def resolved(self, dim: int) -> "AmConfig":
        cov = np.atleast_2d(np.asarray(self.initial_cov, dtype=float))
        if cov.shape != (dim, dim):
            raise InvalidParameter(f"initial_cov must be {dim}x{dim}")
        np.linalg.cholesky(cov)  # raises if not SPD
        start = 10 * dim if self.adaptation_start is None else self.adaptation_start
        if start < 2 * dim:
            raise InvalidParameter("adaptation_start must be at least 2 * dim")
        scale = 2.38 ** 2 / dim if self.scale is None else self.scale
        eps = 1e-10 * np.trace(cov) / dim if self.regularization is None else self.regularization
        return AmConfig(cov, start, scale, eps)


def am_run(target: TargetDensity, init, n: int, cfg: AmConfig, rng: np.random.Generator,
           burn: int = 0) -> Chain:
    x = np.array(init, dtype=float).reshape(-1)
    lp = _check_init(target, x)
    d = target.dim
    cfg = cfg.resolved(d)
    chol = np.linalg.cholesky(cfg.initial_cov)
    eye_eps = cfg.regularization * np.eye(d)
    # running mean / scatter of all visited states (Welford recursion)
    k = 1
    mean = x.copy()
    scatter = np.zeros((d, d))
    out = np.empty((n, d))
    lt = np.empty(n)
    acc = 0
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            acc = 0
            t0 = time.perf_counter()
        if k >= cfg.adaptation_start:
            cov = cfg.scale * (scatter / (k - 1)) + eye_eps
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                pass  # keep the previous factor; regularisation makes this rare
        y = x + chol @ rng.standard_normal(d)
        if target.in_support(y):
            ly = target(y)
            if math.log(rng.random()) < ly - lp:
                x, lp = y, ly
                acc += 1
        k += 1
        delta = x - mean
        mean += delta / k
        scatter += np.outer(delta, x - mean)
        if it >= burn:
            out[it - burn] = x
            lt[it - burn] = lp
    wall = time.perf_counter() - t0
    return Chain(out, target.labels, wall_seconds=wall, accepted={"am": acc}, proposed={"am": n},
                 eval_count=target.eval_count, log_target=lt)


# ---------------------------------------------------------------------------
# t-walk


@dataclass
class TwalkConfig:
    """Move probabilities and shape parameters of the t-walk.

    The defaults are those of the original t-walk implementation.
    ``n1`` is the expected number of coordinates moved per proposal.
    """

    p_walk: float = 0.4918
    p_traverse: float = 0.4918
    p_blow: float = 0.0082
    p_hop: float = 0.0082
    a_walk: float = 1.5
    a_traverse: float = 6.0
    n1: int = 4

    def __post_init__(self):
        probs = np.array([self.p_walk, self.p_traverse, self.p_blow, self.p_hop])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidParameter("t-walk move probabilities must be >= 0 and sum to 1")
        if self.a_walk <= 0 or self.a_traverse <= 1 or self.n1 < 1:
            raise InvalidParameter("need a_walk > 0, a_traverse > 1, n1 >= 1")


_TWALK_MOVES = ("walk", "traverse", "blow", "hop")


def twalk_run(target: TargetDensity, init_pair, n: int, cfg: TwalkConfig | None = None,
              rng: np.random.Generator | None = None, burn: int = 0) -> Chain:
    """t-walk on the product space; the chain records the first point of the pair."""
    cfg = cfg or TwalkConfig()
    if rng is None:
        raise InvalidParameter("an rng is required")
    x = np.array(init_pair[0], dtype=float).reshape(-1)
    xp = np.array(init_pair[1], dtype=float).reshape(-1)
    lp = _check_init(target, x)
    lpp = _check_init(target, xp)
    if np.any(x == xp):
        raise IdenticalPair("the two initial points must differ in every coordinate")
    d = target.dim
    p_phi = min(d, cfg.n1) / d
    cum = np.cumsum([cfg.p_walk, cfg.p_traverse, cfg.p_blow, cfg.p_hop])
    aw, at = cfg.a_walk, cfg.a_traverse
    p_beta_low = (at - 1.0) / (2.0 * at)
    out = np.empty((n, d))
    lt = np.empty(n)
    accepted = dict.fromkeys(_TWALK_MOVES, 0)
    proposed = dict.fromkeys(_TWALK_MOVES, 0)
    random, normal = rng.random, rng.standard_normal
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            accepted = dict.fromkeys(_TWALK_MOVES, 0)
            proposed = dict.fromkeys(_TWALK_MOVES, 0)
            t0 = time.perf_counter()
        ker = random()
        move_first = random() < 0.5
        a, b, la = (x, xp, lp) if move_first else (xp, x, lpp)
        if d == 1:
            phi = np.ones(1, dtype=bool)
        else:
            phi = random(d) < p_phi
            while not phi.any():
                phi = random(d) < p_phi
        nphi = int(phi.sum())
        y = a.copy()
        if ker < cum[0]:
            move = "walk"
            u = random(nphi)
            z = (aw / (1.0 + aw)) * (aw * u * u + 2.0 * u - 1.0)
            y[phi] = a[phi] + (a[phi] - b[phi]) * z
            extra = 0.0
        elif ker < cum[1]:
            move = "traverse"
            if random() < p_beta_low:
                beta = math.exp(math.log(random()) / (at + 1.0))
            else:
                beta = math.exp(math.log(random()) / (1.0 - at))
            y[phi] = b[phi] + beta * (b[phi] - a[phi])
            extra = (nphi - 2) * math.log(beta)
        else:
            sigma = float(np.max(np.abs(b[phi] - a[phi])))
            if ker < cum[2]:
                move = "blow"
                y[phi] = b[phi] + sigma * normal(nphi)
                sigma_rev = float(np.max(np.abs(b[phi] - y[phi])))
                fwd = -nphi * math.log(sigma) - np.sum((y[phi] - b[phi]) ** 2) / (2 * sigma * sigma)
                rev = -nphi * math.log(sigma_rev) - np.sum((a[phi] - b[phi]) ** 2) / (2 * sigma_rev * sigma_rev)
            else:
                move = "hop"
                y[phi] = a[phi] + (sigma / 3.0) * normal(nphi)
                sigma_rev = float(np.max(np.abs(b[phi] - y[phi])))
                s_f, s_r = sigma / 3.0, sigma_rev / 3.0
                fwd = -nphi * math.log(s_f) - np.sum((y[phi] - a[phi]) ** 2) / (2 * s_f * s_f)
                rev = -nphi * math.log(s_r) - np.sum((a[phi] - y[phi]) ** 2) / (2 * s_r * s_r)
            extra = float(rev - fwd)
        proposed[move] += 1
        if target.in_support(y) and not np.any(y == b):
            ly = target(y)
            if math.log(random()) < ly - la + extra:
                accepted[move] += 1
                if move_first:
                    x, lp = y, ly
                else:
                    xp, lpp = y, ly
        if it >= burn:
            out[it - burn] = x
            lt[it - burn] = lp
    wall = time.perf_counter() - t0
    return Chain(out, target.labels, wall_seconds=wall, accepted=accepted, proposed=proposed,
                 eval_count=target.eval_count, log_target=lt)


# ---------------------------------------------------------------------------
# adaptive independence Metropolis for univariate targets


class _Envelope:
    """Piecewise-linear interpolant of a log-density through sorted support points.

    Outside the outermost points the end segments are extended, down to a
    finite support bound or as exponential tails to infinity.
    """

    def __init__(self, xs, ls, lo, hi):
        self.lo, self.hi = lo, hi
        self.xs = list(xs)
        self.ls = list(ls)
        self._rebuild()

    def tails_ok(self, xs, ls) -> bool:
        s_left = (ls[1] - ls[0]) / (xs[1] - xs[0])
        s_right = (ls[-1] - ls[-2]) / (xs[-1] - xs[-2])
        return (math.isfinite(self.lo) or s_left > 0) and (math.isfinite(self.hi) or s_right < 0)

    def _rebuild(self):
        xs, ls = np.array(self.xs), np.array(self.ls)
        if not self.tails_ok(xs, ls):
            raise UnboundedTarget("envelope tails are not integrable; widen the bracket")
        slopes = np.diff(ls) / np.diff(xs)
        # piece k covers [knots[k], knots[k+1]]; piece 0 and the last are the tails
        self.slopes = np.concatenate([[slopes[0]], slopes, [slopes[-1]]])
        self.knots = np.concatenate([[self.lo], xs, [self.hi]])
        self.knot_vals = np.concatenate([[ls[0] - slopes[0] * (xs[0] - self.lo)], ls,
                                         [ls[-1] + slopes[-1] * (self.hi - xs[-1])]])
        logm = np.empty(len(self.slopes))
        for k, s in enumerate(self.slopes):
            logm[k] = self._log_piece_mass(k, s)
        if np.any(np.isnan(logm)) or np.any(logm == math.inf):
            raise UnboundedTarget("envelope mass is not finite")
        top = np.max(logm)
        w = np.exp(logm - top)
        self.cum = np.cumsum(w) / w.sum()
        self.log_norm = top + math.log(w.sum())

    def _log_piece_mass(self, k, s):
        a, b = self.knots[k], self.knots[k + 1]
        if k == 0 and not math.isfinite(a):
            return self.knot_vals[1] - math.log(s)
        if k == len(self.slopes) - 1 and not math.isfinite(b):
            return self.knot_vals[k] - math.log(-s)
        h = b - a
        la, lb = self.knot_vals[k], self.knot_vals[k + 1]
        if abs(s) * h < 1e-12:
            return la + math.log(h)
        return max(la, lb) + math.log(-math.expm1(-abs(s) * h) / abs(s))

    def value(self, x: float) -> float:
        k = bisect.bisect_right(self.xs, x)  # piece index in [0, len(xs)]
        return self.knot_vals[k + 1] + self.slopes[k] * (x - self.knots[k + 1]) if k < len(self.xs) \
            else self.knot_vals[k] + self.slopes[k] * (x - self.knots[k])

    def sample(self, rng) -> float:
        k = int(np.searchsorted(self.cum, rng.random(), side="right"))
        k = min(k, len(self.slopes) - 1)
        s = self.slopes[k]
        a, b = self.knots[k], self.knots[k + 1]
        v = rng.random()
        if not math.isfinite(a):
            return b + math.log(v) / s          # left exponential tail, s > 0
        if not math.isfinite(b):
            return a + math.log(v) / s          # right exponential tail, s < 0
        h = b - a
        if abs(s) * h < 1e-12:
            return a + v * h
        if s > 0:
            return b + math.log1p(v * math.expm1(-s * h)) / s
        return a + math.log1p(v * math.expm1(s * h)) / s

    def add(self, x: float, lx: float) -> bool:
        k = bisect.bisect_left(self.xs, x)
        if (k < len(self.xs) and self.xs[k] == x) or not math.isfinite(lx):
            return False
        xs = self.xs[:k] + [x] + self.xs[k:]
        ls = self.ls[:k] + [lx] + self.ls[k:]
        if not self.tails_ok(np.array(xs), np.array(ls)):
            return False
        self.xs, self.ls = xs, ls
        self._rebuild()
        return True


def aims_run(logpdf: Callable[[float], float], support: tuple[float, float], n: int,
             rng: np.random.Generator, bracket: tuple[float, float] | None = None,
             burn: int = 0, n_init: int = 7, max_points: int = 200,
             label: str = "x") -> Chain:
    """Adaptive independence Metropolis sampler for a univariate log-density.

    The proposal is ``exp`` of a piecewise-linear interpolant of ``logpdf``
    through a growing set of support points, seeded with ``n_init`` points
    evenly spread over ``bracket``. A rejected proposal is added as a new
    support point (up to ``max_points``), so the proposal converges to the
    target and acceptance tends to one. The current state is also added,
    with probability ``1 - q(x)/pi(x)``, where the proposal density ``q``
    underweights the target. Each step is an exact Metropolis-Hastings step
    for the current proposal.
    """
    lo, hi = float(support[0]), float(support[1])
    if bracket is None:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidParameter("a bracket is required for unbounded support")
        pad = 1e-6 * (hi - lo)
        bracket = (lo + pad, hi - pad)
    xs = np.linspace(bracket[0], bracket[1], n_init)
    if not (xs[0] > lo and xs[-1] < hi):
        raise InvalidParameter("bracket must lie strictly inside the support")
    evals = 0
    ls = []
    for v in xs:
        ls.append(float(logpdf(float(v))))
        evals += 1
    finite = [(v, l) for v, l in zip(xs, ls) if math.isfinite(l)]
    if len(finite) < 2:
        raise BadInit("log-density must be finite at two or more bracket points")
    env = _Envelope([v for v, _ in finite], [l for _, l in finite], lo, hi)

    best = max(finite, key=lambda t: t[1])
    x, lx = float(best[0]), float(best[1])
    out = np.empty(n)
    lt = np.empty(n)
    acc = 0
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            acc = 0
            t0 = time.perf_counter()
        y = env.sample(rng)
        if lo < y < hi:
            ly = float(logpdf(y))
            evals += 1
        else:
            ly = -math.inf
        log_ratio = (ly - env.value(y)) - (lx - env.value(x))
        if math.log(rng.random()) < log_ratio:
            x, lx = y, ly
            acc += 1
        elif len(env.xs) < max_points:
            env.add(y, ly)
        # where the proposal underweights the target the chain lingers but never
        # rejects, so also refine at the current state with prob. 1 - q/pi
        under = lx - env.value(x)
        if under > 0 and len(env.xs) < max_points and rng.random() < -math.expm1(-under):
            env.add(x, lx)
        if it >= burn:
            out[it - burn] = x
            lt[it - burn] = lx
    wall = time.perf_counter() - t0
    return Chain(out, (label,), wall_seconds=wall, accepted={"aims": acc}, proposed={"aims": n},
                 eval_count=evals, log_target=lt, meta={"support_points": len(env.xs)})


# ---------------------------------------------------------------------------
# Metropolis-within-Gibbs and plain Gibbs


@dataclass
class ExactBlock:
    """Block updated by an exact draw from its full conditional.

    ``draw(state, rng)`` returns the new values for ``indices``.
    """

    name: str
    indices: Sequence[int]
    draw: Callable[[np.ndarray, np.random.Generator], object]


@dataclass
class RwmBlock:
    """Block updated by ``config.iterations_per_block`` random-walk steps.

    ``log_conditional(state)`` is the log full conditional (up to a constant)
    evaluated at the full state vector. Proposals outside ``[lower, upper)``
    are rejected without evaluation.
    """

    name: str
    indices: Sequence[int]
    log_conditional: Callable[[np.ndarray], float]
    config: RwmConfig
    lower: float = -math.inf
    upper: float = math.inf


@dataclass
class MwgPlan:
    blocks: list
    dim: int
    labels: tuple[str, ...] = ()
    accepted: dict = field(default_factory=dict)
    proposed: dict = field(default_factory=dict)
    evals: int = 0

    def __post_init__(self):
        seen = sorted(i for blk in self.blocks for i in blk.indices)
        if seen != list(range(self.dim)):
            raise InvalidParameter("MwG blocks must partition the coordinates")
        if not self.labels:
            self.labels = tuple(f"x{i}" for i in range(self.dim))
        self.reset_counts()

    def reset_counts(self):
        self.accepted = {b.name: 0 for b in self.blocks if isinstance(b, RwmBlock)}
        self.proposed = dict(self.accepted)
        self.evals = 0


def mwg_sweep(plan: MwgPlan, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One pass over the plan's blocks in order; ``state`` is updated in place."""
    for blk in plan.blocks:
        idx = blk.indices
        if isinstance(blk, ExactBlock):
            state[idx] = blk.draw(state, rng)
            continue
        step = blk.config.step_sd
        cur = blk.log_conditional(state)
        plan.evals += 1
        for _ in range(blk.config.iterations_per_block):
            plan.proposed[blk.name] += 1
            old = state[idx].copy()
            prop = old + np.asarray(step) * rng.standard_normal(len(idx))
            if np.any(prop < blk.lower) or np.any(prop >= blk.upper):
                continue
            state[idx] = prop
            new = blk.log_conditional(state)
            plan.evals += 1
            if math.log(rng.random()) < new - cur:
                cur = new
                plan.accepted[blk.name] += 1
            else:
                state[idx] = old
    return state


def mwg_run(plan: MwgPlan, init, n: int, rng: np.random.Generator, burn: int = 0) -> Chain:
    state = np.array(init, dtype=float).reshape(-1)
    if state.size != plan.dim:
        raise BadInit(f"initial state has {state.size} entries, plan has {plan.dim}")
    for blk in plan.blocks:
        if isinstance(blk, RwmBlock):
            v = state[blk.indices]
            if np.any(v < blk.lower) or np.any(v >= blk.upper) or not math.isfinite(blk.log_conditional(state)):
                raise BadInit(f"initial state not in the support of block {blk.name!r}")
    out = np.empty((n, plan.dim))
    plan.reset_counts()
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            plan.reset_counts()
            t0 = time.perf_counter()
        mwg_sweep(plan, state, rng)
        if it >= burn:
            out[it - burn] = state
    wall = time.perf_counter() - t0
    return Chain(out, plan.labels, wall_seconds=wall, accepted=dict(plan.accepted),
                 proposed=dict(plan.proposed), eval_count=plan.evals)


def gibbs_run(sweep: Callable, init_state, n: int, rng: np.random.Generator,
              record: Callable[[object], Sequence[float]], labels: Sequence[str],
              burn: int = 0) -> Chain:
    """Run ``state = sweep(state, rng)`` and keep ``record(state)`` per iteration."""
    state = init_state
    out = np.empty((n, len(labels)))
    t0 = time.perf_counter()
    for it in range(burn + n):
        if it == burn:
            t0 = time.perf_counter()
        state = sweep(state, rng)
        if it >= burn:
            out[it - burn] = record(state)
    wall = time.perf_counter() - t0
    return Chain(out, tuple(labels), wall_seconds=wall, accepted={"gibbs": n}, proposed={"gibbs": n})


def tune_rwm_sd(training_chain: Chain, column: int | str) -> float:
    """Twice the sample standard deviation of one column of a training run."""
    if len(training_chain) < 100:
        raise DegenerateChain("training chain must have at least 100 rows")
    col = training_chain.column(column) if isinstance(column, str) else training_chain.samples[:, column]
    sd = float(np.std(col, ddof=1))
    if not sd > 0:
        raise DegenerateChain("training column has zero variance")
    return 2.0 * sd
