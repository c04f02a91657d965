"""Weibull and Poisson primitives.

The Weibull law is parametrized by shape ``k`` and scale ``s`` (months)::

    F(t) = 1 - exp(-(t/s)**k)
    f(t) = (k/s) (t/s)**(k-1) exp(-(t/s)**k)

A rate parametrization ``exp(-(b t)**k)`` converts with ``b = 1/s``.

All functions accept scalars or numpy arrays and return a Python float for
scalar input.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "WeibullParams",
    "PoissonParam",
    "weibull_pdf",
    "weibull_log_pdf",
    "weibull_cdf",
    "weibull_sf",
    "weibull_quantile",
    "weibull_sample",
    "poisson_pmf",
    "poisson_sample",
]

# Inversion is exact and cheap while the pmf table stays short.
_POISSON_INVERSION_LIMIT = 30.0


@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float

    def __post_init__(self):
        for name in ("shape", "scale"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"Weibull {name} must be positive and finite, got {value!r}")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def rate(self):
        """Rate ``1/scale`` for the ``exp(-(rate*t)**shape)`` convention."""
        return 1.0 / self.scale


@dataclass(frozen=True)
class PoissonParam:
    intensity: float

    def __post_init__(self):
        if not np.isfinite(self.intensity) or self.intensity < 0:
            raise DomainError(f"Poisson intensity must be >= 0 and finite, got {self.intensity!r}")
        object.__setattr__(self, "intensity", float(self.intensity))


def _times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("time must be non-negative")
    return arr


def _ret(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def _cumulative_hazard(t, p):
    return (t / p.scale) ** p.shape


def weibull_cdf(t, p):
    """Distribution function ``1 - exp(-(t/scale)**shape)``."""
    t = _times(t)
    return _ret(-np.expm1(-_cumulative_hazard(t, p)))


def weibull_sf(t, p):
    """Survival function ``exp(-(t/scale)**shape)``."""
    t = _times(t)
    return _ret(np.exp(-_cumulative_hazard(t, p)))


def weibull_pdf(t, p):
    """Density of the Weibull law.

    At ``t = 0`` the density is 0 for shape > 1, ``1/scale`` for shape = 1
    and infinite for shape < 1.
    """
    t = _times(t)
    k, s = p.shape, p.scale
    z = t / s
    with np.errstate(divide="ignore"):
        if k == 1.0:
            base = np.ones_like(z)
        else:
            base = z ** (k - 1.0)
    return _ret((k / s) * base * np.exp(-(z**k)))


def weibull_log_pdf(t, p):
    """Log density; ``-inf`` where the density vanishes."""
    t = _times(t)
    k, s = p.shape, p.scale
    if k == 1.0:
        body = 0.0
    else:
        with np.errstate(divide="ignore"):
            body = (k - 1.0) * (np.log(t) - np.log(s))
    return _ret(np.log(k) - np.log(s) + body - _cumulative_hazard(t, p))


def weibull_quantile(u, p):
    """Inverse distribution function ``scale * (-log(1-u))**(1/shape)``."""
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any(u < 0) or np.any(u >= 1):
        raise DomainError("quantile level must lie in [0, 1)")
    return _ret(p.scale * (-np.log1p(-u)) ** (1.0 / p.shape))


def weibull_sample(rng, p, size=None):
    """Inverse-transform draws; ``rng`` is a :class:`numpy.random.Generator`."""
    return weibull_quantile(rng.random(size), p)


def _intensity(p):
    return p.intensity if isinstance(p, PoissonParam) else PoissonParam(p).intensity


def poisson_pmf(m, p):
    """``theta**m exp(-theta) / m!``, evaluated in log space.

    ``p`` may be a :class:`PoissonParam` or a bare intensity.
    """
    theta = _intensity(p)
    m = np.asarray(m)
    if np.any(m < 0) or np.any(np.floor(m) != m):
        raise DomainError("m must be a non-negative integer")
    m = m.astype(float)
    if theta == 0.0:
        return _ret(np.where(m == 0, 1.0, 0.0))
    return _ret(np.exp(m * np.log(theta) - theta - gammaln(m + 1.0)))


def _poisson_inversion(rng, theta, size):
    u = rng.random(size)
    # Table up to a point past which the tail mass is below double precision.
    m_max = int(np.ceil(theta + 12.0 * np.sqrt(theta) + 30.0))
    cdf = np.cumsum(poisson_pmf(np.arange(m_max + 1), theta))
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, u, side="right")
    return int(draws) if size is None else draws.astype(np.int64)


def poisson_sample(rng, p, size=None):
    """Draw latent-cause counts.

    Sequential inversion below intensity 30; above it numpy's transformed
    rejection sampler, which is exact as well.
    """
    theta = _intensity(p)
    if theta == 0.0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    if theta < _POISSON_INVERSION_LIMIT:
        return _poisson_inversion(rng, theta, size)
    draws = rng.poisson(theta, size)
    return int(draws) if size is None else draws.astype(np.int64)
