"""Common interface for the case-study models."""
from __future__ import annotations

from abc import ABC, abstractmethod
from importlib import resources

import numpy as np

from ..core import TargetDensity
from ..samplers import MwgPlan


def fixture_path(name: str):
    return resources.files("marginal_mcmc") / "data" / name


class ModelBundle(ABC):
    """One hierarchical model with its data frozen in.

    Marginal samplers work in ``coord_labels`` coordinates; every sampler's
    output is reported in ``stat_labels`` (the hyperparameters in their
    natural units). ``sample_latent`` is the conditional step of
    marginal-then-conditional sampling.
    """

    name: str = ""
    coord_labels: tuple[str, ...] = ()
    stat_labels: tuple[str, ...] = ()
    latent_labels: tuple[str, ...] = ()

    # marginal posterior --------------------------------------------------
    @abstractmethod
    def log_marginal(self, coords: np.ndarray) -> float: ...

    @abstractmethod
    def support(self) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def marginal_init(self) -> np.ndarray: ...

    def marginal_init_pair(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.marginal_init()
        return x, x * (1.0 + 0.05 * np.sign(x + (x == 0))) + 0.01 * (x == 0)

    def target(self) -> TargetDensity:
        lo, hi = self.support()
        return TargetDensity(self.log_marginal, lo, hi, self.marginal_init(), self.coord_labels)

    @abstractmethod
    def coords_to_stats(self, coords: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def stats_to_hyper(self, stats: np.ndarray) -> tuple: ...

    # joint Gibbs ----------------------------------------------------------
    @abstractmethod
    def gibbs_init(self): ...

    @abstractmethod
    def gibbs_sweep(self, state, rng: np.random.Generator): ...

    @abstractmethod
    def gibbs_stats(self, state) -> np.ndarray: ...

    # latent structure -----------------------------------------------------
    @abstractmethod
    def sample_latent(self, hyper: tuple, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def one_block(self, hyper: tuple, x_star: np.ndarray) -> float: ...

    # tailor-made Metropolis-within-Gibbs, where the model has one ----------
    def mwg_plan(self, step: float) -> MwgPlan | None:
        return None

    def mwg_init(self) -> np.ndarray:
        return self.marginal_init()

    mwg_tuned_coord: str | None = None
    mwg_default_step: float = 1.0
