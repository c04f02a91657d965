"""Censored maximum-likelihood fitting of the promotion-time cure model.

Optimization runs on the unconstrained vector ``log(theta, shape, scale)``
so the reported parameters are always positive.  Standard errors come from a
central-difference Hessian of the negative log-likelihood in that space,
mapped back to natural units with the delta method.
"""
from dataclasses import dataclass, field
from enum import Enum
import math
from numbers import Real

import numpy as np
from scipy import optimize

from .distributions import WeibullParams
from .errors import InitializationError, PreconditionError, UnidentifiableError
from .promotion import (
    ModelParams,
    as_survival_data,
    cure_fraction,
    log_likelihood,
    log_likelihood_gradient,
)

__all__ = [
    "Optimizer",
    "FitOptions",
    "FitResult",
    "StandardErrors",
    "StratifiedFitResult",
    "RiskRank",
    "initial_params",
    "fit_mle",
    "fit_stratified",
    "numeric_hessian",
    "standard_errors",
    "risk_ranking",
]


JITTER = 0.3


class Optimizer(str, Enum):
    SIMPLEX = "simplex"
    QUASI_NEWTON = "quasi-newton"


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    relative_tolerance: float = 1e-8
    multistart_count: int = 5
    optimizer: Optimizer = Optimizer.QUASI_NEWTON
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if self.max_iterations <= 0 or self.multistart_count <= 0:
            raise PreconditionError("max_iterations and multistart_count must be positive")
        if not self.relative_tolerance > 0:
            raise PreconditionError("relative_tolerance must be positive")


@dataclass
class StandardErrors:
    """Delta-method standard errors in natural units.

    ``values`` is ``None`` when the Hessian is not positive definite; nothing
    is fabricated in that case and ``degenerate`` is set.
    """

    values: np.ndarray | None
    cure_fraction: float | None
    covariance: np.ndarray | None
    degenerate: bool
    message: str = ""


@dataclass
class FitResult:
    params: ModelParams
    log_likelihood: float
    standard_errors: np.ndarray | None
    cure_fraction_se: float | None
    converged: bool
    iterations: int
    n_events: int
    n_censored: int
    gradient_norm: float
    degenerate: bool = False
    message: str = ""

    @property
    def cure_fraction(self):
        return cure_fraction(self.params.theta)

    def wald_interval(self, index=0, z=1.959963984540054):
        """Symmetric Wald interval for one parameter (0=theta, 1=shape, 2=scale)."""
        if self.standard_errors is None:
            return None
        est = self.params.as_array()[index]
        half = z * self.standard_errors[index]
        return est - half, est + half


@dataclass
class StratifiedFitResult:
    shared_weibull: WeibullParams
    per_group_theta: dict
    log_likelihood: float
    converged: bool
    shared_standard_errors: np.ndarray | None = None
    degenerate_groups: tuple = ()
    degenerate: bool = False
    iterations: int = 0
    gradient_norm: float = float("nan")
    group_counts: dict = field(default_factory=dict)
    message: str = ""

    def group_params(self, label):
        return ModelParams(self.per_group_theta[label][0], self.shared_weibull)


@dataclass(frozen=True)
class RiskRank:
    label: str
    theta: float
    cure_fraction: float


def initial_params(data):
    """Starting values from censoring rate and mean event time."""
    d = as_survival_data(data)
    n = len(d)
    if n == 0 or d.n_events == 0:
        raise InitializationError("starting values need at least one event")
    mean_time = float(d.times[d.events].mean())
    if not mean_time > 0:
        raise InitializationError("all event times are zero")
    censored = d.n_censored / n
    theta0 = -math.log(max(censored, 1.0 / (2 * n)))
    return ModelParams.from_values(theta0, 1.0, mean_time)


def numeric_hessian(fun, x, grad=None, steps=None):
    """Central-difference Hessian of a scalar function at ``x``.

    With ``grad`` the Hessian is built from central differences of the
    gradient and symmetrized; otherwise from function values.  The default
    step is ``max(1e-5, 1e-5*|x_j|)`` per coordinate.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = np.maximum(1e-5, 1e-5 * np.abs(x)) if steps is None else np.asarray(steps, float)
    hess = np.empty((n, n))
    if grad is not None:
        for j in range(n):
            e = np.zeros(n)
            e[j] = h[j]
            hess[:, j] = (np.asarray(grad(x + e)) - np.asarray(grad(x - e))) / (2 * h[j])
        return 0.5 * (hess + hess.T)
    f0 = fun(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (fun(x + ei) - 2 * f0 + fun(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            val = (
                fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)
            ) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def _invert_information(hess):
    """Inverse of a Hessian of a negative log-likelihood, or None if not PD."""
    if not np.all(np.isfinite(hess)):
        return None
    try:
        chol = np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol


# ----------------------------------------------------------------------------
# single-population fit
# ----------------------------------------------------------------------------


def _params_from_x(x):
    with np.errstate(over="ignore"):
        theta, k, s = np.exp(x)
    return ModelParams.from_values(theta, k, s)


def _single_objective(data):
    def value_and_grad(x):
        try:
            p = _params_from_x(x)
        except ValueError:
            return np.inf, np.full(3, np.nan)
        with np.errstate(all="ignore"):
            ll = log_likelihood(p, data)
            if not np.isfinite(ll):
                return np.inf, np.full(3, np.nan)
            g = log_likelihood_gradient(p, data)
        # chain rule for the log reparametrization
        return -ll, -g * p.as_array()

    return value_and_grad


def standard_errors(p, data):
    """Delta-method standard errors at a stationary point ``p``."""
    d = as_survival_data(data)
    obj = _single_objective(d)
    x = np.log(p.as_array())
    hess = numeric_hessian(lambda z: obj(z)[0], x, grad=lambda z: obj(z)[1])
    return _standard_errors_from_hessian(hess, p.as_array())


def _standard_errors_from_hessian(hess, natural):
    cov_x = _invert_information(hess)
    if cov_x is None:
        return StandardErrors(None, None, None, True, "Hessian is not positive definite")
    jac = np.diag(natural)
    cov = jac @ cov_x @ jac
    se = np.sqrt(np.diag(cov))
    # d exp(-theta) / d log(theta) = -theta exp(-theta)
    cure_se = float(math.exp(-natural[0]) * se[0])
    return StandardErrors(se, cure_se, cov, False)


def _jittered_starts(x0, opts):
    starts = [np.asarray(x0, dtype=float)]
    for i in range(1, opts.multistart_count):
        rng = np.random.default_rng([opts.seed, i])
        starts.append(starts[0] + rng.uniform(-JITTER, JITTER, size=starts[0].size))
    return starts


def _minimize(value_and_grad, x0, opts, ll_scale):
    """Run one restart until the convergence test holds or the budget is spent.

    Returns ``(x, f, iterations, last_relative_improvement)``.
    """
    gtol = 1e-8 * (1.0 + ll_scale)
    x = np.asarray(x0, dtype=float)
    f_curr = value_and_grad(x)[0]
    iterations = 0
    rel_impr = np.inf
    while iterations < opts.max_iterations:
        trace = [f_curr]

        def record(intermediate_result):
            trace.append(float(intermediate_result.fun))

        budget = opts.max_iterations - iterations
        with np.errstate(all="ignore"):
            if opts.optimizer is Optimizer.QUASI_NEWTON:
                res = optimize.minimize(
                    value_and_grad, x, jac=True, method="BFGS", callback=record,
                    options={"maxiter": budget, "gtol": gtol},
                )
            else:
                res = optimize.minimize(
                    lambda z: value_and_grad(z)[0], x, method="Nelder-Mead", callback=record,
                    options={
                        "maxiter": budget,
                        "xatol": 1e-10,
                        "fatol": opts.relative_tolerance * (1.0 + ll_scale),
                    },
                )
        iterations += max(int(res.nit), 1)
        if res.fun <= f_curr:
            x, f_curr = res.x, float(res.fun)
        if len(trace) >= 2:
            rel_impr = abs(trace[-2] - trace[-1]) / max(1.0, abs(trace[-1]))
        else:
            rel_impr = 0.0
        if rel_impr < opts.relative_tolerance or int(res.nit) == 0:
            break
    return x, f_curr, iterations, rel_impr


def _gradient_norm(p, data):
    with np.errstate(all="ignore"):
        return float(np.linalg.norm(log_likelihood_gradient(p, data)))


def fit_mle(data, opts=None):
    """Maximum-likelihood fit of ``(theta, shape, scale)`` to censored data."""
    opts = opts or FitOptions()
    d = as_survival_data(data)
    if len(d) == 0:
        raise PreconditionError("no observations")
    if d.n_events == 0:
        raise UnidentifiableError("all observations are censored; theta degenerates to 0")
    p0 = initial_params(d)
    event_times = np.unique(d.times[d.events])
    identical = event_times.size < 2

    obj = _single_objective(d)
    ll_scale = abs(log_likelihood(p0, d))
    best = None
    total_iter = 0
    for start in _jittered_starts(np.log(p0.as_array()), opts):
        x, f, nit, rel_impr = _minimize(obj, start, opts, ll_scale)
        total_iter += nit
        if not np.isfinite(f):
            continue
        if best is None or f < best[1]:
            best = (x, f, rel_impr)
    if best is None:
        return FitResult(p0, float("-inf"), None, None, False, total_iter,
                         d.n_events, d.n_censored, float("nan"), True,
                         "no start produced a finite likelihood")

    x, f, rel_impr = best
    p = _params_from_x(x)
    ll = -f
    gnorm = _gradient_norm(p, d)
    converged = bool(
        rel_impr < opts.relative_tolerance and gnorm < 1e-5 * (1.0 + abs(ll))
    )
    message = ""
    if identical:
        converged = False
        message = "all event times are identical; Weibull shape is not identifiable"
    elif not converged:
        message = f"not converged (gradient norm {gnorm:.3g})"

    se = standard_errors(p, d) if np.all(np.isfinite(x)) else StandardErrors(
        None, None, None, True, "non-finite optimum")
    if se.degenerate and not message:
        message = se.message
    return FitResult(
        params=p,
        log_likelihood=ll,
        standard_errors=se.values,
        cure_fraction_se=se.cure_fraction,
        converged=converged,
        iterations=total_iter,
        n_events=d.n_events,
        n_censored=d.n_censored,
        gradient_norm=gnorm,
        degenerate=se.degenerate or identical,
        message=message,
    )


# ----------------------------------------------------------------------------
# shared-baseline stratified fit
# ----------------------------------------------------------------------------


def _stratified_objective(datasets):
    """Joint objective over ``log(shape, scale, theta_1..theta_G)``."""

    def value_and_grad(x):
        with np.errstate(over="ignore"):
            nat = np.exp(x)
        k, s = nat[0], nat[1]
        try:
            weib = WeibullParams(k, s)
        except ValueError:
            return np.inf, np.full(x.size, np.nan)
        total = 0.0
        grad = np.zeros(x.size)
        with np.errstate(all="ignore"):
            for j, d in enumerate(datasets):
                try:
                    p = ModelParams(nat[2 + j], weib)
                except ValueError:
                    return np.inf, np.full(x.size, np.nan)
                ll = log_likelihood(p, d)
                if not np.isfinite(ll):
                    return np.inf, np.full(x.size, np.nan)
                g = log_likelihood_gradient(p, d)
                total += ll
                grad[2 + j] = g[0]
                grad[0] += g[1]
                grad[1] += g[2]
        return -total, -grad * nat

    return value_and_grad


def fit_stratified(groups, opts=None):
    """Joint fit with one Weibull baseline shared by all groups and a theta per group.

    Groups without any event get ``theta = 0`` and are listed in
    ``degenerate_groups``; they do not inform the shared baseline.
    """
    opts = opts or FitOptions()
    if len(groups) < 2:
        raise PreconditionError("stratified fit needs at least two groups")
    data = {}
    for label, obs in groups.items():
        d = as_survival_data(obs)
        if len(d) == 0:
            raise PreconditionError(f"group {label!r} has no observations")
        data[label] = d

    active = [g for g, d in data.items() if d.n_events > 0]
    degenerate_groups = tuple(g for g in data if g not in active)
    if not active:
        raise UnidentifiableError("every group is fully censored")

    pooled_events = np.concatenate([data[g].times[data[g].events] for g in active])
    scale0 = float(pooled_events.mean())
    if not scale0 > 0:
        raise InitializationError("all event times are zero")
    thetas0 = [initial_params(data[g]).theta for g in active]
    x0 = np.log(np.array([1.0, scale0] + thetas0))

    datasets = [data[g] for g in active]
    obj = _stratified_objective(datasets)
    ll_scale = abs(obj(x0)[0])
    best = None
    total_iter = 0
    for start in _jittered_starts(x0, opts):
        x, f, nit, rel_impr = _minimize(obj, start, opts, ll_scale)
        total_iter += nit
        if np.isfinite(f) and (best is None or f < best[1]):
            best = (x, f, rel_impr)
    if best is None:
        raise UnidentifiableError("no start produced a finite likelihood")

    x, f, rel_impr = best
    nat = np.exp(x)
    ll = -f
    grad_x = obj(x)[1]
    grad_nat = grad_x / nat
    gnorm = float(np.linalg.norm(grad_nat))
    converged = bool(rel_impr < opts.relative_tolerance and gnorm < 1e-5 * (1.0 + abs(ll)))

    hess = numeric_hessian(lambda z: obj(z)[0], x, grad=lambda z: obj(z)[1])
    cov_x = _invert_information(hess)
    if cov_x is None:
        se_nat = None
        message = "joint Hessian is not positive definite"
    else:
        se_nat = nat * np.sqrt(np.diag(cov_x))
        message = ""
    if not converged and not message:
        message = f"not converged (gradient norm {gnorm:.3g})"

    per_group = {}
    for label in data:
        if label in active:
            j = active.index(label)
            se = None if se_nat is None else float(se_nat[2 + j])
            per_group[label] = (float(nat[2 + j]), se)
        else:
            per_group[label] = (0.0, None)
    return StratifiedFitResult(
        shared_weibull=WeibullParams(nat[0], nat[1]),
        per_group_theta=per_group,
        log_likelihood=ll,
        converged=converged,
        shared_standard_errors=None if se_nat is None else se_nat[:2].copy(),
        degenerate_groups=degenerate_groups,
        degenerate=bool(degenerate_groups) or se_nat is None,
        iterations=total_iter,
        gradient_norm=gnorm,
        group_counts={g: (d.n_events, d.n_censored) for g, d in data.items()},
        message=message,
    )


# ----------------------------------------------------------------------------
# risk comparison
# ----------------------------------------------------------------------------


def _theta_of(value):
    if isinstance(value, FitResult):
        return value.params.theta
    if isinstance(value, ModelParams):
        return value.theta
    if isinstance(value, Real):
        return float(value)
    # (theta, standard error) pairs as stored by StratifiedFitResult
    return float(value[0])


def risk_ranking(results):
    """Order groups from lowest to highest recovery intensity.

    Ascending ``theta`` means descending cure fraction, so the first entry is
    the group least susceptible to recovery.  Ties fall back to label order.
    """
    if isinstance(results, StratifiedFitResult):
        results = results.per_group_theta
    if not results:
        raise PreconditionError("nothing to rank")
    ranked = sorted(((_theta_of(v), str(k)) for k, v in results.items()))
    return [RiskRank(label, theta, cure_fraction(theta)) for theta, label in ranked]
