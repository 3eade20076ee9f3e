"""Experiment plumbing: build a model, run a named sampler, benchmark over data sizes."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Chain, _atomic_write, make_rng
from .diagnostics import diagnose, iact
from .errors import InvalidParameter, WindowFailure
from .models import MODELS, ModelBundle
from .models.censored import CensoredModel
from .models.dyes import DyesModel
from .models.pump import PumpModel, load_pump
from .models.ratpup import RatpupModel, load_ratpup_records
from .samplers import AmConfig, aims_run, am_run, gibbs_run, mwg_run, tune_rwm_sd, twalk_run

SAMPLERS = ("gibbs", "mwg", "twalk", "am", "aims")
PILOT_LENGTH = 2000


@dataclass
class DataSource:
    """``fixture`` (bundled data), ``file`` (``path``) or ``synthetic`` (``size``, ``seed``)."""

    kind: str = "fixture"
    path: str | None = None
    size: int | None = None
    seed: int = 0
    threshold: float = 3.0   # censoring point for censored files

    def __post_init__(self):
        if self.kind not in ("fixture", "file", "synthetic"):
            raise InvalidParameter(f"unknown data source {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise InvalidParameter("file data source needs a path")
        if self.kind == "synthetic" and not (self.size and self.size > 0):
            raise InvalidParameter("synthetic data source needs a positive size")


@dataclass
class RunConfig:
    model: str
    sampler: str
    data: DataSource = field(default_factory=DataSource)
    burn: int = 1000
    samples: int = 10_000
    thin: int = 1
    statistics: tuple[str, ...] = ()
    out: str = "out"
    seed: int = 0
    step: float | None = None        # MwG random-walk step; tuned by a training run if None
    training: int | None = None      # MwG training length; model default if None

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidParameter(f"unknown model {self.model!r}; choose from {sorted(MODELS)}")
        if self.sampler not in SAMPLERS:
            raise InvalidParameter(f"unknown sampler {self.sampler!r}; choose from {SAMPLERS}")
        if self.burn < 0 or self.samples <= 0 or self.thin < 1:
            raise InvalidParameter("need burn >= 0, samples > 0, thin >= 1")
        if isinstance(self.data, dict):
            self.data = DataSource(**self.data)
        self.statistics = tuple(self.statistics)
        known = MODELS[self.model].stat_labels + ("log_target",)
        bad = [s for s in self.statistics if s not in known]
        if bad:
            raise InvalidParameter(f"model {self.model!r} has no statistics {bad}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "data" in d and isinstance(d["data"], dict):
            d["data"] = DataSource(**d["data"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidParameter(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_model(model_id: str, data: DataSource | None = None) -> ModelBundle:
    data = data or DataSource()
    if model_id not in MODELS:
        raise InvalidParameter(f"unknown model {model_id!r}")
    if data.kind == "synthetic":
        return MODELS[model_id].synthetic(data.size, make_rng(data.seed, 1))
    if model_id == "pump":
        return PumpModel(load_pump(data.path))
    if model_id == "dyes":
        if data.kind == "file":
            rows = np.loadtxt(data.path, delimiter=",", skiprows=1, ndmin=2)
            return DyesModel(rows[:, 1:])
        return DyesModel()
    if model_id == "ratpup":
        return RatpupModel(load_ratpup_records(data.path))
    if model_id == "censored":
        if data.kind == "file":
            y = np.loadtxt(data.path, delimiter=",", skiprows=1, ndmin=1)
            return CensoredModel.from_data(y[y < data.threshold], y.size, data.threshold)
        # no censored data ships with the package: the documented synthetic set
        return CensoredModel.synthetic(100, make_rng(data.seed, 1))
    raise InvalidParameter(f"unknown model {model_id!r}")


def _marginal_chain(model: ModelBundle, coords: Chain, sampler: str) -> Chain:
    out = coords.with_columns(model.coords_to_stats(coords.samples), model.stat_labels)
    out.meta.update(sampler=sampler)
    return out


def run_sampler(model: ModelBundle, sampler: str, n: int, burn: int, rng: np.random.Generator,
                step: float | None = None, training: int | None = None) -> Chain:
    """Run one sampler; the chain's columns are ``model.stat_labels``.

    Wall time covers the retained iterations only: burn-in, MwG training
    runs and model precomputation are excluded.
    """
    if sampler == "gibbs":
        ch = gibbs_run(model.gibbs_sweep, model.gibbs_init(), n, rng, model.gibbs_stats,
                       model.stat_labels, burn=burn)
        ch.meta.update(sampler="gibbs")
        return ch
    if sampler == "mwg":
        if model.mwg_plan(1.0) is None:
            raise InvalidParameter(f"model {model.name!r} has no tailor-made sampler")
        if step is None:
            length = training or getattr(model, "mwg_training", None) or max(2 * burn, 1000)
            plan = model.mwg_plan(model.mwg_default_step)
            train = mwg_run(plan, model.mwg_init(), length, rng)
            step = tune_rwm_sd(train, model.mwg_tuned_coord)
        plan = model.mwg_plan(step)
        ch = _marginal_chain(model, mwg_run(plan, model.mwg_init(), n, rng, burn=burn), "mwg")
        ch.meta.update(step=step)
        return ch
    target = model.target()
    if sampler == "twalk":
        return _marginal_chain(model, twalk_run(target, model.marginal_init_pair(), n, rng=rng, burn=burn),
                               "twalk")
    if sampler == "am":
        x0 = model.marginal_init()
        cov = np.diag((0.01 * np.maximum(np.abs(x0), 1e-3)) ** 2)
        return _marginal_chain(model, am_run(target, x0, n, AmConfig(cov), rng, burn=burn), "am")
    if sampler == "aims":
        if target.dim != 1:
            raise InvalidParameter("aims is univariate")
        bracket = getattr(model, "aims_bracket", None)
        lo, hi = model.support()
        ch = aims_run(lambda v: model.log_marginal(np.array([v])), (lo[0], hi[0]), n, rng,
                      bracket=bracket, burn=burn, label=model.coord_labels[0])
        return _marginal_chain(model, ch, "aims")
    raise InvalidParameter(f"unknown sampler {sampler!r}")


def run(cfg: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Run one configured chain and write chain CSV, metadata JSON and diagnostics CSV."""
    model = build_model(cfg.model, cfg.data)
    rng = make_rng(cfg.seed, 0)
    ch = run_sampler(model, cfg.sampler, cfg.samples * cfg.thin, cfg.burn, rng, cfg.step, cfg.training)
    if cfg.thin > 1:
        ch = ch.thin(cfg.thin)
    ch.seed = cfg.seed
    ch.meta.update(model=cfg.model, burn=cfg.burn, thin=cfg.thin, config=_jsonable(asdict(cfg)))
    report = diagnose(ch, cfg.model, cfg.sampler, cfg.burn)
    if cfg.statistics:
        report.stats = {k: v for k, v in report.stats.items() if k in cfg.statistics}
    out = Path(out_dir or cfg.out)
    stem = f"{cfg.model}_{cfg.sampler}"
    ch.to_csv(out / f"{stem}_chain.csv")
    _atomic_write(out / f"{stem}_diagnostics.csv", report.to_csv())
    return {"chain": ch, "report": report, "chain_path": out / f"{stem}_chain.csv"}


def _jsonable(d):
    return json.loads(json.dumps(d, default=str))


# ---------------------------------------------------------------------------
# scaling benchmarks


BENCH_FIELDS = ("size", "sampler", "statistic", "N", "burn", "iact", "iact_err", "cces",
                "wall_seconds", "eval_count", "replicates")


def pilot_iact(model: ModelBundle, sampler: str, rng, step=None, pilot: int = PILOT_LENGTH):
    """Largest IACT over the monitored statistics in a short pilot run.

    A pilot too short for a self-consistent window (typically a chain still
    leaving its starting region) is retried at double length, up to 16x.
    """
    for attempt in range(5):
        ch = run_sampler(model, sampler, pilot, pilot // 10, rng, step=step)
        try:
            taus = [iact(ch.samples[:, j])[0] for j in range(ch.samples.shape[1])]
            return max(taus), ch.meta.get("step", step)
        except WindowFailure:
            if attempt == 4:
                raise
            pilot *= 2


def bench(model_id: str, sizes, samplers, replicates: int = 5, seed: int = 0,
          pilot: int = PILOT_LENGTH, statistics_: tuple[str, ...] = ()) -> list[dict]:
    """IACT and CCES per size, sampler and statistic.

    For each size a fresh synthetic data set is generated; each sampler gets
    a pilot run, then burn = 10 IACT and length = max(1000 IACT, 1000),
    IACT being the largest over the monitored statistics. Medians over
    replicates are reported.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise InvalidParameter("size grid must be ascending")
    if not samplers:
        raise InvalidParameter("no samplers given")
    rows = []
    for si, size in enumerate(sizes):
        model = MODELS[model_id].synthetic(int(size), make_rng(seed, 1000 + si))
        for ki, sampler in enumerate(samplers):
            per_stat: dict[str, list] = {}
            for rep in range(replicates):
                rng = make_rng(seed, 10_000 * (si + 1) + 100 * ki + rep)
                tau, step = pilot_iact(model, sampler, rng, pilot=pilot)
                burn = int(math.ceil(10 * tau))
                n = max(int(math.ceil(1000 * tau)), 1000)
                ch = run_sampler(model, sampler, n, burn, rng, step=step)
                rep_ = diagnose(ch, model_id, sampler, burn, include_log_target=False)
                for lab, s in rep_.stats.items():
                    if statistics_ and lab not in statistics_:
                        continue
                    per_stat.setdefault(lab, []).append(
                        (s.iact, s.iact_err, s.cces, ch.wall_seconds, ch.eval_count, n, burn))
            for lab, vals in per_stat.items():
                med = [statistics.median(v[k] for v in vals) for k in range(7)]
                rows.append(dict(size=int(size), sampler=sampler, statistic=lab, N=int(med[5]),
                                 burn=int(med[6]), iact=med[0], iact_err=med[1], cces=med[2],
                                 wall_seconds=med[3], eval_count=int(med[4]), replicates=replicates))
    rows.sort(key=lambda r: (r["size"], r["sampler"], r["statistic"]))
    return rows


def rows_to_csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


PLOT_FIELDS = ("sampler", "statistic", "size", "log10_size", "iact", "log10_iact", "cces", "log10_cces")


def plotdata(rows) -> list[dict]:
    """Log-log series per sampler and statistic, sizes ascending."""
    out = []
    for r in rows:
        size, tau = float(r["size"]), float(r["iact"])
        cces = float(r["wall_seconds"]) * tau / float(r["N"])
        out.append(dict(sampler=r["sampler"], statistic=r["statistic"], size=int(size),
                        log10_size=math.log10(size), iact=tau, log10_iact=math.log10(tau),
                        cces=cces, log10_cces=math.log10(cces)))
    out.sort(key=lambda r: (r["sampler"], r["statistic"], r["size"]))
    return out


# ---------------------------------------------------------------------------
# side-by-side comparison and marginal-then-conditional sampling

COMPARE_FIELDS = ("sampler", "statistic", "burn", "samples", "wall_seconds", "mean", "iact", "cces")


def compare(model_id: str, samplers, burn: dict | int, samples: dict | int, seed: int = 0,
            data: DataSource | None = None) -> list[dict]:
    if not samplers:
        raise InvalidParameter("no samplers given")
    model = build_model(model_id, data)
    rows = []
    for k, sampler in enumerate(samplers):
        b = burn[sampler] if isinstance(burn, dict) else burn
        n = samples[sampler] if isinstance(samples, dict) else samples
        ch = run_sampler(model, sampler, n, b, make_rng(seed, k))
        rep = diagnose(ch, model_id, sampler, b, include_log_target=False)
        for lab, s in rep.stats.items():
            rows.append(dict(sampler=sampler, statistic=lab, burn=b, samples=n,
                             wall_seconds=ch.wall_seconds, mean=s.mean, iact=s.iact, cces=s.cces))
    return rows


def mtc(model: ModelBundle, chain: Chain, count: int, rng) -> Chain:
    """One latent draw per marginal sample: joint posterior samples ``(stats, latent)``."""
    if count > len(chain):
        raise InvalidParameter(f"asked for {count} draws from a chain of {len(chain)}")
    idx = [chain.statistic_labels.index(l) for l in model.stat_labels]
    rows = []
    for i in range(count):
        st = chain.samples[i, idx]
        lat = np.asarray(model.sample_latent(model.stats_to_hyper(st), rng), dtype=float)
        rows.append(np.concatenate([st, lat]))
    return Chain(np.array(rows).reshape(count, -1), model.stat_labels + model.latent_labels,
                 seed=chain.seed, meta={"source": "mtc"})
