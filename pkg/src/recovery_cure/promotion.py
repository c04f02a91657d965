"""Promotion-time cure model with Poisson latent causes and Weibull latent times.

For a contract with ``M ~ Poisson(theta)`` latent recovery causes, each with
an independent Weibull time, recovery happens at the earliest of them and a
contract with ``M = 0`` is never recovered.  The population quantities are::

    S_Y(t) = exp(-theta F(t))
    f_Y(t) = theta f(t) exp(-theta F(t))

and the cure fraction ``S_Y(inf) = exp(-theta)``.
"""
from dataclasses import dataclass

import numpy as np

from .distributions import WeibullParams, weibull_cdf, weibull_log_pdf, weibull_pdf
from .errors import DomainError, PreconditionError

__all__ = [
    "ModelParams",
    "Observation",
    "SurvivalData",
    "as_survival_data",
    "population_survival",
    "population_density",
    "population_hazard",
    "cure_fraction",
    "log_likelihood",
    "log_likelihood_gradient",
]


@dataclass(frozen=True)
class ModelParams:
    theta: float
    weibull: WeibullParams

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta < 0:
            raise DomainError(f"theta must be >= 0 and finite, got {self.theta!r}")
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def from_values(cls, theta, shape, scale):
        return cls(theta, WeibullParams(shape, scale))

    @property
    def shape(self):
        return self.weibull.shape

    @property
    def scale(self):
        return self.weibull.scale

    def as_array(self):
        """``(theta, shape, scale)`` as a float array."""
        return np.array([self.theta, self.shape, self.scale])


@dataclass(frozen=True)
class Observation:
    """One contract: ``time`` in months and ``event`` True when recovered."""

    time: float
    event: bool

    def __post_init__(self):
        if not np.isfinite(self.time) or self.time < 0:
            raise DomainError(f"observation time must be >= 0, got {self.time!r}")


@dataclass(frozen=True)
class SurvivalData:
    """Column-oriented observations used internally by the likelihood code."""

    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        events = np.asarray(self.events, dtype=bool).reshape(-1)
        if times.shape != events.shape:
            raise PreconditionError("times and events must have the same length")
        if np.any(~np.isfinite(times)) or np.any(times < 0):
            raise DomainError("observation times must be finite and >= 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)

    def __len__(self):
        return self.times.size

    @property
    def n_events(self):
        return int(self.events.sum())

    @property
    def n_censored(self):
        return int(self.times.size - self.events.sum())

    @classmethod
    def from_observations(cls, observations):
        obs = list(observations)
        return cls(
            np.fromiter((o.time for o in obs), float, len(obs)),
            np.fromiter((o.event for o in obs), bool, len(obs)),
        )

    def to_observations(self):
        return [Observation(float(t), bool(e)) for t, e in zip(self.times, self.events)]


def as_survival_data(data):
    """Accept a :class:`SurvivalData` or any iterable of :class:`Observation`."""
    if isinstance(data, SurvivalData):
        return data
    return SurvivalData.from_observations(data)


def _ret(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def cure_fraction(theta):
    if theta < 0:
        raise DomainError("theta must be >= 0")
    return float(np.exp(-theta))


def population_survival(t, p):
    """Probability of not being recovered by time ``t``."""
    return _ret(np.exp(-p.theta * np.asarray(weibull_cdf(t, p.weibull))))


def population_density(t, p):
    """Defective density of the recovery time; integrates to ``1 - exp(-theta)``."""
    F = np.asarray(weibull_cdf(t, p.weibull))
    f = np.asarray(weibull_pdf(t, p.weibull))
    return _ret(p.theta * f * np.exp(-p.theta * F))


def population_hazard(t, p):
    """``f_Y / S_Y``, which simplifies to ``theta * f(t)``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise DomainError("hazard is defined for t > 0")
    return _ret(p.theta * np.asarray(weibull_pdf(t_arr, p.weibull)))


def log_likelihood(p, data):
    """Censored log-likelihood ``sum(d*log f_Y(t) + (1-d)*log S_Y(t))``.

    Returns ``-inf`` (never raises) when an event sits where ``f_Y`` is zero,
    including any event under ``theta = 0``.
    """
    d = as_survival_data(data)
    if len(d) == 0:
        raise PreconditionError("log-likelihood needs at least one observation")
    theta = p.theta
    hazard_part = theta * np.sum(weibull_cdf(d.times, p.weibull))
    if d.n_events == 0:
        return float(-hazard_part)
    if theta == 0.0:
        return float("-inf")
    log_f = np.asarray(weibull_log_pdf(d.times[d.events], p.weibull))
    return float(d.n_events * np.log(theta) + np.sum(log_f) - hazard_part)


def log_likelihood_gradient(p, data):
    """Analytic gradient of :func:`log_likelihood` in ``(theta, shape, scale)``."""
    d = as_survival_data(data)
    if len(d) == 0:
        raise PreconditionError("log-likelihood needs at least one observation")
    theta, k, s = p.theta, p.shape, p.scale
    if theta == 0.0 and d.n_events:
        raise DomainError("gradient is undefined at theta = 0 with events present")

    t = d.times
    pos = t > 0
    log_ratio = np.zeros_like(t)
    log_ratio[pos] = np.log(t[pos]) - np.log(s)
    z = (t / s) ** k
    surv = np.exp(-z)
    F = -np.expm1(-z)

    # dF/dshape = e^{-z} z log(t/s);  dF/dscale = -e^{-z} k z / s
    dF_dk = surv * z * log_ratio
    dF_ds = -surv * k * z / s

    ev = d.events
    n_ev = d.n_events
    g_theta = -np.sum(F)
    g_k = -theta * np.sum(dF_dk)
    g_s = -theta * np.sum(dF_ds)
    if n_ev:
        g_theta += n_ev / theta
        g_k += np.sum(1.0 / k + log_ratio[ev] - z[ev] * log_ratio[ev])
        g_s += np.sum(k * (z[ev] - 1.0) / s)
    return np.array([g_theta, g_k, g_s])
