"""Autocorrelation, integrated autocorrelation time, ESS and CCES.

IACT is reported in the statistics convention ``tau = 1 + 2 * sum(rho_k)``,
i.e. the number of chain steps worth one independent draw.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Chain
from .errors import ConstantSeries, InvalidParameter, WindowFailure

WINDOW_C = 6.0


def _autocov_fft(x: np.ndarray) -> np.ndarray:
    n = x.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    return np.fft.irfft(f * np.conj(f), size)[:n] / n


def _centered(series) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    xc = x - x.mean()
    if not np.any(xc != 0.0):
        raise ConstantSeries("series is constant")
    return xc


def autocorr(series, max_lag: int) -> np.ndarray:
    """Biased (divide-by-N) autocorrelations ``rho_0..rho_max_lag``."""
    xc = _centered(series)
    if xc.size < 4 * max_lag:
        raise InvalidParameter(f"need at least {4 * max_lag} points for max_lag={max_lag}")
    acov = _autocov_fft(xc)
    return acov[: max_lag + 1] / acov[0]


def iact(series, c: float = WINDOW_C) -> tuple[float, float]:
    """Integrated autocorrelation time with the Sokal self-consistent window.

    The window ``W`` is the smallest lag with ``W >= c * tau(W)``. Returns
    ``(tau, err)`` with ``err = tau * sqrt(2 (2W + 1) / N)``.
    """
    xc = _centered(series)
    n = xc.size
    if n < 1000:
        raise InvalidParameter(f"IACT needs at least 1000 points, got {n}")
    acov = _autocov_fft(xc)
    rho = acov[: n // 2 + 1] / acov[0]
    tau = 1.0 + 2.0 * np.cumsum(rho[1:])  # tau[W-1] uses lags 1..W
    lags = np.arange(1, tau.size + 1)
    ok = np.nonzero(lags >= c * tau)[0]
    if ok.size == 0:
        raise WindowFailure("no self-consistent window below N/2; chain too short")
    w = int(lags[ok[0]])
    t = float(tau[ok[0]])
    return t, t * math.sqrt(2.0 * (2 * w + 1) / n)


def ess(n: int, tau: float) -> float:
    return n / tau


def cces(wall_seconds: float, n: int, tau: float) -> float:
    """Compute seconds per effective sample: ``wall_seconds * tau / n``."""
    if not (wall_seconds > 0 and n > 0 and tau > 0):
        raise InvalidParameter("cces needs positive wall time, length and tau")
    return wall_seconds * tau / n


@dataclass
class StatDiag:
    statistic: str
    mean: float
    sd: float
    iact: float
    iact_err: float
    ess: float
    cces: float

    @property
    def mc_se(self) -> float:
        """Monte Carlo standard error of the mean."""
        return self.sd / math.sqrt(self.ess)


@dataclass
class DiagReport:
    model: str
    sampler: str
    n: int
    burn: int
    wall_seconds: float
    stats: dict[str, StatDiag] = field(default_factory=dict)

    def __getitem__(self, label: str) -> StatDiag:
        return self.stats[label]

    FIELDS = ("model", "sampler", "statistic", "N", "burn", "mean", "sd", "tau", "tau_err",
              "ess", "wall_seconds", "cces")

    def rows(self) -> list[dict]:
        return [
            {"model": self.model, "sampler": self.sampler, "statistic": s.statistic, "N": self.n,
             "burn": self.burn, "mean": s.mean, "sd": s.sd, "tau": s.iact, "tau_err": s.iact_err,
             "ess": s.ess, "wall_seconds": self.wall_seconds, "cces": s.cces}
            for s in self.stats.values()
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.FIELDS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def diagnose(chain: Chain, model: str = "", sampler: str = "", burn: int = 0,
             include_log_target: bool = True) -> DiagReport:
    """IACT/ESS/CCES for every column of ``chain`` (and its log-target, if stored).

    Columns whose IACT cannot be estimated (constant, too short, no
    self-consistent window) get NaN entries instead of failing the run.
    """
    n = len(chain)
    wall = max(chain.wall_seconds, 1e-12)
    report = DiagReport(model, sampler, n, burn, chain.wall_seconds)
    columns = [(lab, chain.samples[:, j]) for j, lab in enumerate(chain.statistic_labels)]
    if include_log_target and chain.log_target is not None:
        columns.append(("log_target", chain.log_target))
    for lab, col in columns:
        try:
            tau, err = iact(col)
        except (ConstantSeries, WindowFailure, InvalidParameter):
            tau, err = math.nan, math.nan
        e = n / tau if tau == tau else math.nan
        report.stats[lab] = StatDiag(lab, float(np.mean(col)), float(np.std(col, ddof=1)), tau, err, e,
                                     wall * tau / n if tau == tau else math.nan)
    return report
