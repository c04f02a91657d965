"""Defaulted-loan portfolios: CSV ingestion, segmentation and summaries.

Input format (UTF-8, header row, dot decimals)::

    contract_id,time_months,recovered,fx_bs,fx_cv[,partially_recovered]

``recovered`` is 0/1.  Unrecovered contracts are censored at the workout
horizon and must carry it as their time.  Rows flagged
``partially_recovered=1`` are excluded on load.
"""
import csv
from dataclasses import dataclass, field
import io
from pathlib import Path

import numpy as np

from .errors import ParseError, SegmentationError, PreconditionError
from .promotion import Observation, SurvivalData, as_survival_data

__all__ = [
    "REQUIRED_COLUMNS",
    "LEVELS",
    "ContractRecord",
    "Portfolio",
    "PartitionSpec",
    "Segments",
    "SummaryRow",
    "load_portfolio",
    "write_portfolio",
    "segment",
    "summarize",
    "write_summary",
]

REQUIRED_COLUMNS = ("contract_id", "time_months", "recovered", "fx_bs", "fx_cv")
OPTIONAL_COLUMNS = ("partially_recovered",)
LEVELS = (1, 2, 3, 4)
DEFAULT_HORIZON = 24.0

SUMMARY_COLUMNS = (
    "label",
    "n_total",
    "n_recovered",
    "n_unrecovered",
    "pct_non_recovery",
    "mean_recovery_time_months",
)


@dataclass(frozen=True)
class ContractRecord:
    contract_id: str
    time_months: float
    recovered: bool
    fx_bs: int
    fx_cv: int

    def observation(self):
        return Observation(self.time_months, self.recovered)


@dataclass(frozen=True)
class Portfolio:
    records: tuple
    horizon_months: float = DEFAULT_HORIZON
    excluded: int = 0

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        h = self.horizon_months
        if not (np.isfinite(h) and h > 0):
            raise PreconditionError(f"horizon must be positive, got {h!r}")
        seen = set()
        for rec in self.records:
            if rec.contract_id in seen:
                raise PreconditionError(f"duplicate contract_id {rec.contract_id!r}")
            seen.add(rec.contract_id)
            problem = _record_problem(rec, h)
            if problem:
                raise PreconditionError(f"contract {rec.contract_id!r}: {problem[1]}")

    def __len__(self):
        return len(self.records)

    def survival_data(self):
        return SurvivalData(
            np.fromiter((r.time_months for r in self.records), float, len(self.records)),
            np.fromiter((r.recovered for r in self.records), bool, len(self.records)),
        )

    def observations(self):
        return [r.observation() for r in self.records]

    @property
    def censored_fraction(self):
        if not self.records:
            return float("nan")
        return sum(not r.recovered for r in self.records) / len(self.records)


def _record_problem(rec, horizon):
    """Return ``(field, message)`` for the first invariant violated, else None."""
    t = rec.time_months
    if not np.isfinite(t) or t < 0:
        return "time_months", f"time {t!r} must be finite and >= 0"
    if rec.recovered and t > horizon:
        return "time_months", f"recovery time {t!r} exceeds horizon {horizon!r}"
    if not rec.recovered and t != horizon:
        return "time_months", f"censored contract must carry the horizon {horizon!r}, got {t!r}"
    for name in ("fx_bs", "fx_cv"):
        if getattr(rec, name) not in LEVELS:
            return name, f"segment label must be one of {LEVELS}"
    return None


def _open_text(source):
    if isinstance(source, (str, Path)):
        return open(source, newline="", encoding="utf-8-sig"), True
    if isinstance(source, (io.TextIOBase,)):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), False


def _parse_flag(raw, line, name):
    value = raw.strip()
    if value not in ("0", "1"):
        raise ParseError(f"expected 0 or 1, got {raw!r}", line, name)
    return value == "1"


def _parse_level(raw, line, name):
    try:
        level = int(raw.strip())
    except ValueError:
        raise ParseError(f"expected an integer level, got {raw!r}", line, name) from None
    if level not in LEVELS:
        raise ParseError(f"level {level} not in {LEVELS}", line, name)
    return level


def load_portfolio(source, horizon=DEFAULT_HORIZON):
    """Parse and validate a portfolio CSV.

    ``source`` may be a path, a binary stream or a text stream.  Errors are
    raised as :class:`ParseError` naming the line and the column.
    """
    if not (np.isfinite(horizon) and horizon > 0):
        raise PreconditionError(f"horizon must be positive, got {horizon!r}")
    stream, owned = _open_text(source)
    try:
        reader = csv.DictReader(stream)
        header = [h.strip() for h in (reader.fieldnames or [])]
        if not header:
            raise ParseError("empty file: header row missing", 1)
        reader.fieldnames = header
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise ParseError(f"missing column '{col}'", 1, col)
        has_partial = "partially_recovered" in header

        records = []
        seen = {}
        excluded = 0
        for row in reader:
            line = reader.line_num
            if None in row or any(row.get(c) is None for c in REQUIRED_COLUMNS):
                raise ParseError("wrong number of fields", line)
            if has_partial and _parse_flag(row["partially_recovered"] or "0", line,
                                           "partially_recovered"):
                excluded += 1
                continue
            cid = row["contract_id"].strip()
            if not cid:
                raise ParseError("empty contract id", line, "contract_id")
            if cid in seen:
                raise ParseError(f"duplicate contract id {cid!r} (first on line {seen[cid]})",
                                 line, "contract_id")
            seen[cid] = line
            try:
                t = float(row["time_months"])
            except ValueError:
                raise ParseError(f"not a number: {row['time_months']!r}", line,
                                 "time_months") from None
            rec = ContractRecord(
                cid,
                t,
                _parse_flag(row["recovered"], line, "recovered"),
                _parse_level(row["fx_bs"], line, "fx_bs"),
                _parse_level(row["fx_cv"], line, "fx_cv"),
            )
            problem = _record_problem(rec, horizon)
            if problem:
                raise ParseError(problem[1], line, problem[0])
            records.append(rec)
    finally:
        if owned:
            stream.close()
    return Portfolio(tuple(records), float(horizon), excluded)


def write_portfolio(portfolio, stream):
    """Write ``portfolio`` in the same CSV format :func:`load_portfolio` reads."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for r in portfolio.records:
        writer.writerow([r.contract_id, repr(r.time_months), int(r.recovered), r.fx_bs, r.fx_cv])


# ----------------------------------------------------------------------------
# segmentation
# ----------------------------------------------------------------------------

_PREFIX = {"fx_cv": "CV", "fx_bs": "BS"}


@dataclass(frozen=True)
class PartitionSpec:
    """Selected levels per covariate; ``None`` leaves a covariate unsplit.

    Selecting both covariates produces the cross partition, labelled
    ``CV<i>xBS<j>``.
    """

    fx_cv: tuple | None = None
    fx_bs: tuple | None = None

    def __post_init__(self):
        if self.fx_cv is None and self.fx_bs is None:
            raise SegmentationError("partition selects no covariate")
        for name in ("fx_cv", "fx_bs"):
            levels = getattr(self, name)
            if levels is None:
                continue
            levels = tuple(sorted(set(int(v) for v in levels)))
            if not levels:
                raise SegmentationError(f"empty level set for {name}")
            bad = [v for v in levels if v not in LEVELS]
            if bad:
                raise SegmentationError(f"{name} levels {bad} not in {LEVELS}")
            object.__setattr__(self, name, levels)

    @classmethod
    def parse(cls, text):
        """Parse ``"fx_cv=1,2"`` or ``"fx_cv=1,2;fx_bs=1,2"``."""
        spec = {}
        for part in filter(None, (p.strip() for p in text.split(";"))):
            name, sep, values = part.partition("=")
            name = name.strip().lower().replace("-", "_")
            if not sep or name not in _PREFIX:
                raise SegmentationError(f"bad partition term {part!r}; expected fx_cv=... or fx_bs=...")
            try:
                spec[name] = tuple(int(v) for v in values.split(",") if v.strip())
            except ValueError:
                raise SegmentationError(f"bad level list in {part!r}") from None
        if not spec:
            raise SegmentationError("empty partition spec")
        return cls(**spec)

    def label(self, rec):
        """Group label of a record, or None when it is outside the selection."""
        parts = []
        for name in ("fx_cv", "fx_bs"):
            levels = getattr(self, name)
            if levels is None:
                continue
            value = getattr(rec, name)
            if value not in levels:
                return None
            parts.append(f"{_PREFIX[name]}{value}")
        return "x".join(parts)

    def labels(self):
        """All labels the spec can produce, in display order."""
        cv = [f"CV{v}" for v in self.fx_cv] if self.fx_cv else [""]
        bs = [f"BS{v}" for v in self.fx_bs] if self.fx_bs else [""]
        return ["x".join(filter(None, (a, b))) for a in cv for b in bs]


class Segments(dict):
    """Mapping from group label to observations; ``dropped`` counts records
    outside the selected levels."""

    def __init__(self, groups, dropped):
        super().__init__(groups)
        self.dropped = dropped


def segment(portfolio, by):
    """Split a portfolio into disjoint groups of :class:`Observation`."""
    if isinstance(by, str):
        by = PartitionSpec.parse(by)
    groups = {label: [] for label in by.labels()}
    dropped = 0
    for rec in portfolio.records:
        label = by.label(rec)
        if label is None:
            dropped += 1
        else:
            groups[label].append(rec.observation())
    groups = {k: v for k, v in groups.items() if v}
    if not groups:
        raise SegmentationError("no records fall in the selected levels")
    return Segments(groups, dropped)


# ----------------------------------------------------------------------------
# summaries
# ----------------------------------------------------------------------------


def _truncated_percentage(part, whole):
    # Truncate, not round, to two decimals; exact integer arithmetic.
    return (10000 * part // whole) / 100


@dataclass(frozen=True)
class SummaryRow:
    label: str
    n_total: int
    n_recovered: int
    n_unrecovered: int
    pct_non_recovery: float
    mean_recovery_time_months: float | None = field(default=None)

    def csv_fields(self):
        mean = self.mean_recovery_time_months
        return [
            self.label,
            self.n_total,
            self.n_recovered,
            self.n_unrecovered,
            f"{self.pct_non_recovery:.2f}",
            "" if mean is None else f"{mean:.2f}",
        ]


def summarize(label, obs):
    """Counts, % non-recovery (truncated to 2 decimals) and mean recovery time."""
    d = as_survival_data(obs)
    n = len(d)
    if n == 0:
        raise PreconditionError("cannot summarize an empty group")
    n_rec = d.n_events
    mean = float(d.times[d.events].mean()) if n_rec else None
    return SummaryRow(label, n, n_rec, n - n_rec, _truncated_percentage(n - n_rec, n), mean)


def write_summary(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
