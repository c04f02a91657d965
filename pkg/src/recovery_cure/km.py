"""Kaplan-Meier product-limit estimator, used as a nonparametric cross-check."""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .promotion import as_survival_data, population_survival

__all__ = ["StepFunction", "kaplan_meier", "sup_distance"]


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function given by its breakpoints.

    ``values[i]`` holds on ``[times[i], times[i+1])``; before ``times[0]``
    the function is 1.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise PreconditionError("times and values must be 1-d and of equal length")
        if np.any(np.diff(times) <= 0):
            raise PreconditionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 1.0)
        return float(out) if out.ndim == 0 else out

    @property
    def breakpoints(self):
        return list(zip(self.times.tolist(), self.values.tolist()))

    def to_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["time", "survival"])
        for t, v in self.breakpoints:
            writer.writerow([repr(t), repr(v)])


def kaplan_meier(obs):
    """Product-limit estimate over the distinct event times.

    A censoring tied with an event time is still at risk at that time.
    """
    d = as_survival_data(obs)
    if len(d) == 0:
        raise PreconditionError("Kaplan-Meier needs at least one observation")
    event_times, deaths = np.unique(d.times[d.events], return_counts=True)
    sorted_times = np.sort(d.times)
    # at risk at t: everyone whose time is >= t
    at_risk = sorted_times.size - np.searchsorted(sorted_times, event_times, side="left")
    surv = np.cumprod(1.0 - deaths / at_risk)
    if event_times.size and event_times[0] == 0.0:
        return StepFunction(event_times, surv)
    return StepFunction(np.concatenate(([0.0], event_times)), np.concatenate(([1.0], surv)))


def sup_distance(s, model, grid):
    """Largest absolute gap between a step function and the model survival on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(s(grid) - population_survival(grid, model))))
