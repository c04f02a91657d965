"""Report builders: fit reports, survival tables, non-recovery curves and figures.

CSV files are the normative output.  Figures are static renderings written
next to them with matplotlib's Agg backend.
"""
import csv
from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import DomainError, PreconditionError
from .estimation import FitResult, StratifiedFitResult
from .km import kaplan_meier
from .portfolio import summarize
from .promotion import ModelParams, cure_fraction, population_survival

__all__ = [
    "SurvivalRow",
    "SurvivalTable",
    "CurveSeries",
    "fit_report",
    "write_fit_report",
    "load_fit_params",
    "parse_group_literal",
    "survival_table",
    "non_recovery_curves",
    "write_curves",
    "plot_curves",
    "plot_km_comparison",
]

FIT_CSV_COLUMNS = (
    "group", "shape", "scale", "theta", "cure_fraction",
    "se_shape", "se_scale", "se_theta", "se_cure_fraction",
    "n_events", "n_censored", "converged", "degenerate",
)


# ----------------------------------------------------------------------------
# fit reports
# ----------------------------------------------------------------------------


def _num(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _group_entry(label, theta, shape, scale, se, counts, converged, degenerate, message=""):
    se = se or {}
    return {
        "label": label,
        "theta": float(theta),
        "shape": float(shape),
        "scale": float(scale),
        "cure_fraction": cure_fraction(theta),
        "se_theta": _num(se.get("theta")),
        "se_shape": _num(se.get("shape")),
        "se_scale": _num(se.get("scale")),
        "se_cure_fraction": _num(se.get("cure_fraction")),
        "n_events": int(counts[0]),
        "n_censored": int(counts[1]),
        "converged": bool(converged),
        "degenerate": bool(degenerate),
        "message": message,
    }


def _single_entry(label, fit):
    se = None
    if fit.standard_errors is not None:
        se = dict(zip(("theta", "shape", "scale"), fit.standard_errors))
        se["cure_fraction"] = fit.cure_fraction_se
    p = fit.params
    return _group_entry(label, p.theta, p.shape, p.scale, se, (fit.n_events, fit.n_censored),
                        fit.converged, fit.degenerate, fit.message)


def fit_report(fits, horizon, baseline):
    """JSON-ready dict from per-group :class:`FitResult` or a stratified fit.

    ``fits`` is either a :class:`StratifiedFitResult` or a mapping of label
    to :class:`FitResult` (or to a message string for groups that could not
    be fitted).
    """
    groups = []
    if isinstance(fits, StratifiedFitResult):
        w = fits.shared_weibull
        shared_se = fits.shared_standard_errors
        for label, (theta, se_theta) in fits.per_group_theta.items():
            se = None
            if shared_se is not None and se_theta is not None:
                se = {"theta": se_theta, "shape": shared_se[0], "scale": shared_se[1],
                      "cure_fraction": math.exp(-theta) * se_theta}
            degenerate = label in fits.degenerate_groups or shared_se is None
            msg = "no recovered contracts; theta set to 0" if label in fits.degenerate_groups else ""
            groups.append(_group_entry(label, theta, w.shape, w.scale, se,
                                       fits.group_counts[label], fits.converged, degenerate, msg))
        ll = fits.log_likelihood
        converged = fits.converged
    else:
        ll = 0.0
        converged = True
        for label, fit in fits.items():
            if isinstance(fit, FitResult):
                groups.append(_single_entry(label, fit))
                ll += fit.log_likelihood
                converged &= fit.converged
            else:
                groups.append({"label": label, "degenerate": True, "converged": False,
                               "message": str(fit)})
                ll = float("nan")
                converged = False
    degenerate = any(g["degenerate"] for g in groups)
    return {
        "horizon_months": float(horizon),
        "baseline": baseline,
        "log_likelihood": _num(ll),
        "converged": bool(converged),
        "degenerate": bool(degenerate),
        "groups": groups,
    }


def _fmt(x, digits):
    return "" if x is None else f"{x:.{digits}f}"


def write_fit_report(report, json_path, csv_path):
    """Full-precision JSON plus a CSV rounded to three decimals."""
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIT_CSV_COLUMNS)
        for g in report["groups"]:
            if "theta" not in g:
                writer.writerow([g["label"]] + [""] * 10 + [int(g["converged"]), int(g["degenerate"])])
                continue
            writer.writerow([
                g["label"],
                _fmt(g["shape"], 3), _fmt(g["scale"], 3), _fmt(g["theta"], 3),
                _fmt(g["cure_fraction"], 3),
                _fmt(g["se_shape"], 3), _fmt(g["se_scale"], 3), _fmt(g["se_theta"], 3),
                _fmt(g["se_cure_fraction"], 3),
                g["n_events"], g["n_censored"], int(g["converged"]), int(g["degenerate"]),
            ])


def load_fit_params(path):
    """Read ``{label: ModelParams}`` back from a JSON fit report."""
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    params = {}
    for g in report.get("groups", []):
        if "theta" not in g:
            continue
        try:
            params[g["label"]] = ModelParams.from_values(g["theta"], g["shape"], g["scale"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"invalid parameters for group {g.get('label')!r}: {exc}") from None
    if not params:
        raise PreconditionError(f"{path}: no fitted groups in report")
    return params


def parse_group_literal(text):
    """``"LABEL:theta,shape,scale"`` -> ``(label, ModelParams)``."""
    label, sep, values = text.rpartition(":")
    if not sep or not label:
        raise DomainError(f"expected LABEL:THETA,SHAPE,SCALE, got {text!r}")
    try:
        theta, shape, scale = (float(v) for v in values.split(","))
    except ValueError:
        raise DomainError(f"expected three numbers after ':' in {text!r}") from None
    return label, ModelParams.from_values(theta, shape, scale)


# ----------------------------------------------------------------------------
# survival tables
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SurvivalRow:
    label: str
    survival_pct: tuple
    observed_pct_unrecovered: float | None = None


@dataclass(frozen=True)
class SurvivalTable:
    horizons: tuple
    rows: tuple

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        has_observed = any(r.observed_pct_unrecovered is not None for r in self.rows)
        header = ["group"] + [f"S_Y({h:g})" for h in self.horizons]
        if has_observed:
            header.append("pct_unrecovered")
        writer.writerow(header)
        for r in self.rows:
            line = [r.label] + [f"{v:.2f}" for v in r.survival_pct]
            if has_observed:
                line.append(_fmt(r.observed_pct_unrecovered, 2))
            writer.writerow(line)


def survival_table(params, horizons, observed=None):
    """Model non-recovery percentages per group at each horizon.

    ``observed`` optionally maps labels to observations; their censored
    percentage fills the comparison column.
    """
    horizons = tuple(float(h) for h in horizons)
    if not horizons or any(h < 0 for h in horizons) or any(
            b <= a for a, b in zip(horizons, horizons[1:])):
        raise DomainError("horizons must be non-negative and strictly ascending")
    rows = []
    for label, p in params.items():
        pct = tuple(100.0 * np.asarray(population_survival(np.array(horizons), p)))
        obs_pct = None
        if observed is not None and observed.get(label):
            obs_pct = summarize(label, observed[label]).pct_non_recovery
        rows.append(SurvivalRow(label, pct, obs_pct))
    return SurvivalTable(horizons, tuple(rows))


# ----------------------------------------------------------------------------
# curves and figures
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveSeries:
    label: str
    theta: float
    times: np.ndarray
    values: np.ndarray


def non_recovery_curves(params, step, horizon=24.0):
    """``S_Y`` on a uniform grid over ``[0, horizon]``, groups ordered by ascending theta."""
    if not step > 0:
        raise DomainError("grid step must be positive")
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    n = int(math.floor(horizon / step + 1e-9))
    grid = np.arange(n + 1) * step
    if grid[-1] < horizon - 1e-9:
        grid = np.append(grid, horizon)
    ordered = sorted(params.items(), key=lambda kv: (kv[1].theta, kv[0]))
    return [CurveSeries(label, p.theta, grid, np.asarray(population_survival(grid, p)))
            for label, p in ordered]


def write_curves(series, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["group", "t", "non_recovery_probability"])
    for s in series:
        for t, v in zip(s.times, s.values):
            writer.writerow([s.label, f"{t:g}", f"{v:.6f}"])


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(series, path, title="Probability of non-recovery"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for s in series:
        ax.plot(s.times, s.values, label=f"{s.label} (theta={s.theta:.3f})")
    ax.set_xlabel("months since default")
    ax.set_ylabel("probability of non-recovery")
    ax.set_ylim(0.0, 1.02)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_km_comparison(groups, params, path, horizon=24.0):
    """Kaplan-Meier steps against the fitted model curve for each group."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    grid = np.linspace(0.0, horizon, 241)
    for i, (label, obs) in enumerate(groups.items()):
        if label not in params:
            continue
        color = f"C{i % 10}"
        km = kaplan_meier(obs)
        ax.step(np.append(km.times, horizon), np.append(km.values, km.values[-1]),
                where="post", color=color, alpha=0.6, lw=1.0)
        ax.plot(grid, population_survival(grid, params[label]), color=color, lw=1.8, label=label)
    ax.set_xlabel("months since default")
    ax.set_ylabel("probability of non-recovery")
    ax.set_ylim(0.0, 1.02)
    ax.set_title("Kaplan-Meier (steps) vs fitted model")
    ax.grid(alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
