"""Draw synthetic portfolios from the latent-cause mechanism.

Each contract gets ``M ~ Poisson(theta)`` latent causes with i.i.d. Weibull
times; recovery happens at the earliest one.  ``M = 0`` (cured) and recovery
after the horizon are both recorded as censored at the horizon.
"""
from dataclasses import dataclass

import numpy as np

from .distributions import poisson_sample, weibull_sample
from .errors import PreconditionError
from .portfolio import ContractRecord, Portfolio
from .promotion import ModelParams, Observation, SurvivalData

__all__ = [
    "SimulationSpec",
    "LatentDraws",
    "simulate_contract",
    "simulate_observations",
    "simulate_portfolio",
]


@dataclass(frozen=True)
class SimulationSpec:
    true_params: ModelParams
    n_contracts: int
    horizon_months: float = 24.0
    seed: int = 0
    fx_bs: int = 1
    fx_cv: int = 1
    id_prefix: str = "C"

    def __post_init__(self):
        if int(self.n_contracts) < 1:
            raise PreconditionError("n_contracts must be >= 1")
        if not self.horizon_months > 0:
            raise PreconditionError("horizon must be positive")


@dataclass(frozen=True)
class LatentDraws:
    """Unobservable quantities behind a simulated sample (testing aid)."""

    counts: np.ndarray
    recovery_times: np.ndarray  # +inf where the count is zero


def simulate_contract(rng, p, horizon):
    """Draw a single contract as an :class:`Observation`."""
    m = poisson_sample(rng, p.theta)
    if m == 0:
        return Observation(float(horizon), False)
    y = float(np.min(weibull_sample(rng, p.weibull, size=m)))
    if y > horizon:
        return Observation(float(horizon), False)
    return Observation(y, True)


def simulate_observations(rng, p, n, horizon, return_latent=False):
    """Vectorized draw of ``n`` contracts.

    Returns :class:`SurvivalData`, plus :class:`LatentDraws` when
    ``return_latent`` is set.
    """
    counts = np.asarray(poisson_sample(rng, p.theta, size=n))
    total = int(counts.sum())
    latent = np.full(n, np.inf)
    if total:
        draws = weibull_sample(rng, p.weibull, size=total)
        has_cause = counts > 0
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))[has_cause]
        latent[has_cause] = np.minimum.reduceat(draws, starts)
    event = latent <= horizon
    times = np.where(event, latent, float(horizon))
    data = SurvivalData(times, event)
    if return_latent:
        return data, LatentDraws(counts, latent)
    return data


def simulate_portfolio(spec):
    """``spec.n_contracts`` independent contracts with sequential ids ``C000001...``.

    All records share the segment labels given in ``spec``.
    """
    rng = np.random.default_rng(spec.seed)
    data = simulate_observations(rng, spec.true_params, int(spec.n_contracts), spec.horizon_months)
    width = max(6, len(str(len(data))))
    records = tuple(
        ContractRecord(f"{spec.id_prefix}{i + 1:0{width}d}", float(t), bool(e), spec.fx_bs, spec.fx_cv)
        for i, (t, e) in enumerate(zip(data.times, data.events))
    )
    return Portfolio(records, spec.horizon_months)
