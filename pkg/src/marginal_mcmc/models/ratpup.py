"""Rat pup birth weights: a linear mixed model with one random effect per litter.

The litter effects ``u`` are integrated out. Because ``Z^T Z`` is diagonal
with the litter sizes on its diagonal, every quantity the marginal needs can
be assembled from sums grouped by litter size, so the per-iteration cost
depends on the largest litter, not on the number of litters.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..core import sample_gamma
from ..errors import EmptyLitter, ImproperPosterior, MalformedRecord, ZeroDensityPoint
from ..numkit import chol_solve, cholesky
from ..samplers import ExactBlock, MwgPlan, RwmBlock, RwmConfig
from .base import ModelBundle, fixture_path

P = 7
BETA_LABELS = tuple(f"beta{i}" for i in range(P))
TREATMENTS = ("control", "high", "low")
SEXES = ("female", "male")


@dataclass(frozen=True)
class RatpupRecords:
    """Pup-level table; string columns are lower-case category names."""

    weight: np.ndarray
    sex: np.ndarray
    treatment: np.ndarray
    litter_id: np.ndarray
    litter_size: np.ndarray

    def __len__(self):
        return len(self.weight)

    def concat(self, other: "RatpupRecords") -> "RatpupRecords":
        return RatpupRecords(*(np.concatenate([getattr(self, f), getattr(other, f)])
                               for f in ("weight", "sex", "treatment", "litter_id", "litter_size")))


def load_ratpup_records(path=None) -> RatpupRecords:
    path = path or fixture_path("ratpup.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return RatpupRecords(
            np.array([float(r["weight"]) for r in rows]),
            np.array([r["sex"].strip().lower() for r in rows]),
            np.array([r["treatment"].strip().lower() for r in rows]),
            np.array([r["litter_id"].strip() for r in rows]),
            np.array([float(r["litter_size"]) for r in rows]),
        )
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(f"bad rat pup record: {exc}") from None


@dataclass(frozen=True)
class RatpupDesign:
    X: np.ndarray          # n x 7, columns (1, t1, t2, s, l, t1 s, t2 s)
    y: np.ndarray
    litter: np.ndarray     # litter index 0..q-1 per pup; Z is its indicator matrix
    q: int

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def ztz(self) -> np.ndarray:
        return np.bincount(self.litter, minlength=self.q).astype(float)

    def dense_Z(self) -> np.ndarray:
        Z = np.zeros((self.n, self.q))
        Z[np.arange(self.n), self.litter] = 1.0
        return Z


def ratpup_ingest(rec: RatpupRecords) -> RatpupDesign:
    n = len(rec)
    if n == 0:
        raise MalformedRecord("no records")
    if not np.all(np.isfinite(rec.weight)):
        raise MalformedRecord("non-finite weight")
    bad_t = ~np.isin(rec.treatment, TREATMENTS)
    bad_s = ~np.isin(rec.sex, SEXES)
    if bad_t.any() or bad_s.any():
        i = int(np.argmax(bad_t | bad_s))
        raise MalformedRecord(f"record {i}: treatment={rec.treatment[i]!r}, sex={rec.sex[i]!r}")
    if np.any(rec.litter_size < 1):
        raise EmptyLitter("litter size below 1")
    ids, litter = np.unique(rec.litter_id, return_inverse=True)
    q = ids.size
    for col in (rec.treatment, rec.litter_size):
        first = {}
        for j, v in zip(litter, col):
            if first.setdefault(j, v) != v:
                raise MalformedRecord(f"litter {ids[j]!r} has inconsistent litter-level values")
    t1 = (rec.treatment == "high").astype(float)
    t2 = (rec.treatment == "low").astype(float)
    s = (rec.sex == "male").astype(float)
    X = np.column_stack([np.ones(n), t1, t2, s, rec.litter_size.astype(float), t1 * s, t2 * s])
    return RatpupDesign(X, rec.weight.astype(float), litter.astype(np.intp), int(q))


def within_litter_sums(design: RatpupDesign, v: np.ndarray) -> np.ndarray:
    """Z^T v for a vector, or Z^T V column by column for an n x k matrix."""
    if v.ndim == 1:
        return np.bincount(design.litter, weights=v, minlength=design.q)
    return np.column_stack([np.bincount(design.litter, weights=v[:, k], minlength=design.q)
                            for k in range(v.shape[1])])


@dataclass(frozen=True)
class RatpupPre:
    XtX: np.ndarray
    Xty: np.ndarray
    yty: float
    sizes: np.ndarray      # distinct litter sizes i present
    counts: np.ndarray     # |J(i)|
    CC: np.ndarray         # per size: sum_j c_j c_j^T, shape (k, 7, 7)
    Cd: np.ndarray         # per size: sum_j c_j d_j, shape (k, 7)
    dd: np.ndarray         # per size: sum_j d_j^2
    n: int
    q: int

    @property
    def r(self) -> int:
        return int(self.sizes.max())


def ratpup_precompute(design: RatpupDesign) -> RatpupPre:
    X, y = design.X, design.y
    C = within_litter_sums(design, X)      # row j is c_j = column j of X^T Z
    d = within_litter_sums(design, y)
    ztz = design.ztz.astype(np.intp)
    sizes = np.unique(ztz)
    CC = np.empty((sizes.size, P, P))
    Cd = np.empty((sizes.size, P))
    dd = np.empty(sizes.size)
    counts = np.empty(sizes.size)
    for k, i in enumerate(sizes):
        sel = ztz == i
        Cs = C[sel]
        M = Cs.T @ Cs
        CC[k] = 0.5 * (M + M.T)
        Cd[k] = Cs.T @ d[sel]
        dd[k] = float(d[sel] @ d[sel])
        counts[k] = sel.sum()
    XtX = X.T @ X
    return RatpupPre(0.5 * (XtX + XtX.T), X.T @ y, float(y @ y), sizes.astype(float), counts,
                     CC, Cd, dd, design.n, design.q)


def ratpup_assemble(lam: float, pre: RatpupPre):
    """(X^T W X, X^T W y, y^T W y, g(lambda)) with W = I - Z (Z^T Z + lambda I)^{-1} Z^T."""
    w = 1.0 / (pre.sizes + lam)
    XtWX = pre.XtX - np.tensordot(w, pre.CC, axes=1)
    XtWy = pre.Xty - w @ pre.Cd
    ytWy = pre.yty - float(w @ pre.dd)
    g = float(pre.counts @ np.log(pre.sizes + lam))
    return XtWX, XtWy, ytWy, g


def ratpup_f(beta, XtWX, XtWy, ytWy) -> float:
    return float(beta @ XtWX @ beta - 2.0 * beta @ XtWy + ytWy)


def rank_PZ(design: RatpupDesign) -> int:
    """rank((I - X(X^T X)^{-1} X^T) Z) = rank([X Z]) - rank(X).

    rank([X Z]) is q plus the rank of X with litter means removed, which
    avoids forming the n x q matrix.
    """
    X = design.X
    counts = design.ztz
    means = within_litter_sums(design, X) / counts[:, None]
    Xc = X - means[design.litter]
    return design.q + int(np.linalg.matrix_rank(Xc)) - int(np.linalg.matrix_rank(X))


@dataclass(frozen=True)
class RatpupHyper:
    """Power-law hyperpriors f(s_u) ~ s_u^-(a+1) and f(s_eps) ~ s_eps^-(b+1).

    ``check`` enforces the propriety region -rank(PZ)/2 < a < 0 and
    a + b > -(n - rank X)/2 for a given design.
    """

    a: float = -1e-4
    b: float = -1e-4

    def check(self, design: RatpupDesign) -> "RatpupHyper":
        t = rank_PZ(design)
        nmp = design.n - int(np.linalg.matrix_rank(design.X))
        if not (-t / 2.0 < self.a < 0.0):
            raise ImproperPosterior(f"need -{t}/2 < a < 0, got a={self.a}")
        if not self.a + self.b > -nmp / 2.0:
            raise ImproperPosterior(f"need a + b > -{nmp}/2, got {self.a + self.b}")
        return self


def ratpup_log_marginal(beta, s, lam, pre: RatpupPre, h: RatpupHyper, assembled=None) -> float:
    """log density of (beta, s, lambda) with s = s_eps and lambda = s_eps / s_u."""
    if not (s > 0 and lam > 0):
        return -math.inf
    XtWX, XtWy, ytWy, g = assembled if assembled is not None else ratpup_assemble(lam, pre)
    f = ratpup_f(np.asarray(beta, dtype=float), XtWX, XtWy, ytWy)
    # likelihood with Jacobian s / lambda^2, times s^-(b+1) (s/lambda)^-(a+1)
    return ((pre.q / 2.0 + h.a - 1.0) * math.log(lam) - (pre.n / 2.0 + h.a + h.b + 1.0) * math.log(s)
            - 0.5 * g - f / (2.0 * s))


def ratpup_log_marginal_orig(beta, s_eps, s_u, pre: RatpupPre, h: RatpupHyper) -> float:
    """Same posterior in (beta, s_eps, s_u), with no Jacobian."""
    if not (s_eps > 0 and s_u > 0):
        return -math.inf
    XtWX, XtWy, ytWy, g = ratpup_assemble(s_eps / s_u, pre)
    f = ratpup_f(np.asarray(beta, dtype=float), XtWX, XtWy, ytWy)
    return (-(pre.n - pre.q) / 2.0 * math.log(s_eps) - pre.q / 2.0 * math.log(s_u)
            - 0.5 * g - f / (2.0 * s_eps)
            - (h.b + 1.0) * math.log(s_eps) - (h.a + 1.0) * math.log(s_u))


class _AssemblyCache:
    """Keeps the last two assemblies; a sweep touches at most two lambda values."""

    def __init__(self, pre: RatpupPre):
        self.pre = pre
        self._keys: list[float] = []
        self._vals: list = []

    def __call__(self, lam: float):
        for k, v in zip(self._keys, self._vals):
            if k == lam:
                return v
        val = ratpup_assemble(lam, self.pre)
        self._keys = [lam] + self._keys[:1]
        self._vals = [val] + self._vals[:1]
        return val


def ratpup_beta_draw(s, XtWX, XtWy, rng) -> np.ndarray:
    """N(A^{-1} b, s A^{-1}) as A^{-1}(b + sqrt(s) L xi) with A = L L^T."""
    F = cholesky(XtWX)
    z = XtWy + math.sqrt(s) * (F.L @ rng.standard_normal(P))
    return chol_solve(F, z)


def ratpup_s_draw(f, pre: RatpupPre, h: RatpupHyper, rng) -> float:
    # 1/s ~ Ga(n/2 + a + b, rate = f/2)
    return 1.0 / sample_gamma(pre.n / 2.0 + h.a + h.b, 0.5 * f, rng)


def ratpup_lambda_log_conditional(lam, beta, s, cache: _AssemblyCache, h: RatpupHyper) -> float:
    if not lam > 0:
        return -math.inf
    XtWX, XtWy, ytWy, g = cache(lam)
    f = ratpup_f(beta, XtWX, XtWy, ytWy)
    return (cache.pre.q / 2.0 + h.a - 1.0) * math.log(lam) - 0.5 * g - f / (2.0 * s)


def ratpup_mwg_plan(pre: RatpupPre, h: RatpupHyper, step: float) -> MwgPlan:
    """State (beta0..beta6, s, lambda): exact beta, exact s, one RWM step on lambda."""
    cache = _AssemblyCache(pre)
    bi, si, li = list(range(P)), [P], [P + 1]

    def draw_beta(st, rng):
        XtWX, XtWy, _, _ = cache(st[P + 1])
        return ratpup_beta_draw(st[P], XtWX, XtWy, rng)

    def draw_s(st, rng):
        XtWX, XtWy, ytWy, _ = cache(st[P + 1])
        return ratpup_s_draw(ratpup_f(st[:P], XtWX, XtWy, ytWy), pre, h, rng)

    blocks = [
        ExactBlock("beta", bi, draw_beta),
        ExactBlock("s", si, draw_s),
        RwmBlock("lambda", li, lambda st: ratpup_lambda_log_conditional(st[P + 1], st[:P], st[P], cache, h),
                 RwmConfig(step, 1), lower=0.0),
    ]
    return MwgPlan(blocks, P + 2, BETA_LABELS + ("s", "lambda"))


@dataclass
class RatpupGibbsState:
    beta: np.ndarray
    u: np.ndarray
    s_u: float
    s_eps: float


class _GibbsWork:
    """Design-level constants reused by every Gibbs sweep."""

    def __init__(self, design: RatpupDesign, pre: RatpupPre):
        self.design = design
        self.F = cholesky(pre.XtX)
        self.C = within_litter_sums(design, design.X)      # q x 7
        self.Xty = pre.Xty
        self.ztz = design.ztz


def ratpup_gibbs_sweep(state: RatpupGibbsState, work: _GibbsWork, h: RatpupHyper, rng) -> RatpupGibbsState:
    """s_u, s_eps, u (one litter at a time), then beta."""
    d = work.design
    beta, u = state.beta, state.u
    s_u = 1.0 / sample_gamma(h.a + d.q / 2.0, 0.5 * float(u @ u), rng)
    resid = d.y - d.X @ beta - u[d.litter]
    s_eps = 1.0 / sample_gamma(h.b + d.n / 2.0, 0.5 * float(resid @ resid), rng)
    lam = s_eps / s_u
    zr = within_litter_sums(d, d.y - d.X @ beta)
    u = np.empty(d.q)
    for j in range(d.q):
        prec = work.ztz[j] + lam
        u[j] = zr[j] / prec + math.sqrt(s_eps / prec) * rng.standard_normal()
    rhs = work.Xty - work.C.T @ u + math.sqrt(s_eps) * (work.F.L @ rng.standard_normal(P))
    beta = chol_solve(work.F, rhs)
    return RatpupGibbsState(beta, u, s_u, s_eps)


def ratpup_sample_latent(beta, s_eps, s_u, design: RatpupDesign, rng) -> np.ndarray:
    lam = s_eps / s_u
    zr = within_litter_sums(design, design.y - design.X @ np.asarray(beta, dtype=float))
    prec = design.ztz + lam
    return zr / prec + np.sqrt(s_eps / prec) * rng.standard_normal(design.q)


def ratpup_one_block(beta, s_eps, s_u, u_star, design: RatpupDesign) -> float:
    """log N(y; X beta + Z u*, s_eps I) + log N(u*; 0, s_u I) - log f(u* | y, beta, s_eps, s_u)."""
    u = np.asarray(u_star, dtype=float).ravel()
    if u.size != design.q or not np.all(np.isfinite(u)):
        raise ZeroDensityPoint("need one finite effect per litter")
    l2pi = math.log(2 * math.pi)
    beta = np.asarray(beta, dtype=float)
    r = design.y - design.X @ beta - u[design.litter]
    lik = -0.5 * design.n * (l2pi + math.log(s_eps)) - 0.5 * float(r @ r) / s_eps
    prior = -0.5 * design.q * (l2pi + math.log(s_u)) - 0.5 * float(u @ u) / s_u
    prec = design.ztz + s_eps / s_u
    mean = within_litter_sums(design, design.y - design.X @ beta) / prec
    e = u - mean
    cond = float(np.sum(-0.5 * (l2pi + np.log(s_eps / prec)) - 0.5 * e * e * prec / s_eps))
    return lik + prior - cond


GENUINE_MEANS = dict(beta=np.array([7.9103, -0.7994, -0.3810, 0.4115, -0.1281, -0.1078, -0.0842]),
                     s_u=0.1055, s_eps=0.1648)


def ratpup_generate_litters(beta, s_u, s_eps, mean_litter_size, extra_litters, rng,
                            id_prefix="syn") -> RatpupRecords:
    beta = np.asarray(beta, dtype=float)
    sizes = np.empty(extra_litters, dtype=int)
    for j in range(extra_litters):
        size = 0
        while size == 0:
            size = int(rng.poisson(mean_litter_size))
        sizes[j] = size
    treat = rng.integers(0, 3, extra_litters)
    u = math.sqrt(s_u) * rng.standard_normal(extra_litters)
    litter = np.repeat(np.arange(extra_litters), sizes)
    npup = litter.size
    male = rng.integers(0, 2, npup).astype(float)
    tr = np.array(TREATMENTS)[treat][litter]
    t1 = (tr == "high").astype(float)
    t2 = (tr == "low").astype(float)
    lsize = sizes[litter].astype(float)
    X = np.column_stack([np.ones(npup), t1, t2, male, lsize, t1 * male, t2 * male])
    w = X @ beta + u[litter] + math.sqrt(s_eps) * rng.standard_normal(npup)
    return RatpupRecords(w, np.where(male == 1.0, "male", "female"), tr,
                         np.array([f"{id_prefix}{j}" for j in litter]), lsize)


class RatpupModel(ModelBundle):
    name = "ratpup"
    coord_labels = BETA_LABELS + ("s", "lambda")
    stat_labels = BETA_LABELS + ("s_u", "s_eps")
    mwg_tuned_coord = "lambda"
    mwg_default_step = 1.0
    mwg_training = 10_000

    def __init__(self, records: RatpupRecords | None = None, hyper: RatpupHyper | None = None):
        self.records = records if records is not None else load_ratpup_records()
        self.design = ratpup_ingest(self.records)
        self.hyper = (hyper or RatpupHyper()).check(self.design)
        self.pre = ratpup_precompute(self.design)
        self._work = _GibbsWork(self.design, self.pre)
        self.latent_labels = tuple(f"u{j + 1}" for j in range(self.design.q))
        self.beta_ols = chol_solve(self._work.F, self.pre.Xty)

    @classmethod
    def synthetic(cls, q_total: int, rng, hyper=None):
        """Genuine litters plus generated ones, q_total litters in all."""
        rec = load_ratpup_records()
        q0 = np.unique(rec.litter_id).size
        if q_total > q0:
            mean_size = float(np.mean(ratpup_ingest(rec).ztz))
            g = GENUINE_MEANS
            rec = rec.concat(ratpup_generate_litters(g["beta"], g["s_u"], g["s_eps"], mean_size,
                                                     q_total - q0, rng))
        return cls(rec, hyper)

    def log_marginal(self, coords):
        c = np.asarray(coords, dtype=float)
        return ratpup_log_marginal(c[:P], c[P], c[P + 1], self.pre, self.hyper)

    def support(self):
        lo = np.concatenate([np.full(P, -math.inf), [0.0, 0.0]])
        return lo, np.full(P + 2, math.inf)

    def marginal_init(self):
        return np.concatenate([self.beta_ols, [0.16, 0.16 / 0.105]])

    def marginal_init_pair(self):
        x = self.marginal_init()
        y = x.copy()
        y[:P] += 0.01
        y[P:] *= 1.1
        return x, y

    def coords_to_stats(self, coords):
        c = np.asarray(coords, dtype=float).reshape(-1, P + 2)
        return np.column_stack([c[:, :P], c[:, P] / c[:, P + 1], c[:, P]])

    def stats_to_hyper(self, stats):
        stats = np.asarray(stats, dtype=float)
        return stats[:P], float(stats[P + 1]), float(stats[P])

    def gibbs_init(self):
        s_eps, s_u = 0.16, 0.105
        u = ratpup_conditional_mean(self.beta_ols, s_eps, s_u, self.design)
        return RatpupGibbsState(self.beta_ols.copy(), u, s_u, s_eps)

    def gibbs_sweep(self, state, rng):
        return ratpup_gibbs_sweep(state, self._work, self.hyper, rng)

    def gibbs_stats(self, state):
        return np.concatenate([state.beta, [state.s_u, state.s_eps]])

    def sample_latent(self, hyper, rng):
        beta, s_eps, s_u = hyper
        return ratpup_sample_latent(beta, s_eps, s_u, self.design, rng)

    def one_block(self, hyper, x_star):
        beta, s_eps, s_u = hyper
        return ratpup_one_block(beta, s_eps, s_u, x_star, self.design)

    def mwg_plan(self, step):
        return ratpup_mwg_plan(self.pre, self.hyper, step)


def ratpup_conditional_mean(beta, s_eps, s_u, design: RatpupDesign) -> np.ndarray:
    zr = within_litter_sums(design, design.y - design.X @ np.asarray(beta, dtype=float))
    return zr / (design.ztz + s_eps / s_u)
