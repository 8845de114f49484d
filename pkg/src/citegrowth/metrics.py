"""Forecast scoring: MAPE, direction accuracy, filtered score tables.

Direction accuracy is the fraction of clusters whose predicted movement
relative to the forecast-origin value has the same sign as the realized
movement (a tie counts as a match only when both sides are ties). The
published table pairs each model/horizon with an overall MAPE and a
filtered variant keeping only clusters whose individual absolute
percentage error beats the overall MAPE.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass


@dataclass
class ClusterForecast:
    cluster_id: int
    model: str
    predicted: float
    realized: float
    reference: float  # value at the forecast origin

    def __post_init__(self):
        for v in (self.predicted, self.realized, self.reference):
            if not math.isfinite(v):
                raise ValueError("forecast values must be finite")

    @property
    def ape(self) -> float | None:
        """Absolute percentage error, None when realized is zero."""
        if self.realized == 0:
            return None
        return abs(self.predicted - self.realized) / abs(self.realized) * 100.0


@dataclass
class MapeResult:
    percent: float
    n_used: int
    n_excluded: int  # clusters dropped because realized == 0


def mape(forecasts) -> MapeResult:
    """Mean absolute percentage error over clusters with realized != 0."""
    apes = [f.ape for f in forecasts]
    used = [a for a in apes if a is not None]
    if not used:
        raise ValueError("all clusters have realized value 0; MAPE undefined")
    return MapeResult(percent=sum(used) / len(used), n_used=len(used),
                      n_excluded=len(apes) - len(used))


def _direction_match(f: ClusterForecast) -> bool:
    pd = (f.predicted > f.reference) - (f.predicted < f.reference)
    rd = (f.realized > f.reference) - (f.realized < f.reference)
    return pd == rd


def direction_accuracy(forecasts) -> float:
    """Percent of clusters whose predicted direction matches realized."""
    forecasts = list(forecasts)
    if not forecasts:
        raise ValueError("no forecasts")
    hits = sum(_direction_match(f) for f in forecasts)
    return hits / len(forecasts) * 100.0


@dataclass
class FilteredScore:
    retained: int
    total: int
    direction_accuracy: float | None  # None when the subset is empty

    @property
    def label(self) -> str:
        return f"{self.retained} / {self.total}"


def filtered_table(forecasts, overall_mape: float) -> FilteredScore:
    """Keep clusters whose own absolute percentage error is strictly
    below the overall MAPE; report subset size and its DA."""
    forecasts = list(forecasts)
    kept = [f for f in forecasts if f.ape is not None and f.ape < overall_mape]
    da = direction_accuracy(kept) if kept else None
    return FilteredScore(retained=len(kept), total=len(forecasts), direction_accuracy=da)


@dataclass
class ScoreRow:
    horizon: int
    model: str
    mape: float
    mape_used: int
    mape_excluded: int
    direction_accuracy: float
    filtered: FilteredScore


def build_score_table(forecasts_by_key) -> list:
    """forecasts_by_key: {(horizon, model): [ClusterForecast, ...]}."""
    rows = []
    for (horizon, model), fcs in sorted(forecasts_by_key.items()):
        mres = mape(fcs)
        rows.append(ScoreRow(
            horizon=horizon, model=model, mape=mres.percent,
            mape_used=mres.n_used, mape_excluded=mres.n_excluded,
            direction_accuracy=direction_accuracy(fcs),
            filtered=filtered_table(fcs, mres.percent),
        ))
    return rows


def write_score_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["horizon_months", "model", "mape_pct", "clusters_scored",
                    "clusters_excluded_zero", "direction_accuracy_pct",
                    "filtered_clusters", "filtered_direction_accuracy_pct"])
        for r in rows:
            w.writerow([r.horizon, r.model, f"{r.mape:.4f}", r.mape_used,
                        r.mape_excluded, f"{r.direction_accuracy:.4f}",
                        r.filtered.label,
                        "" if r.filtered.direction_accuracy is None
                        else f"{r.filtered.direction_accuracy:.4f}"])


def write_score_json(rows, path):
    payload = []
    for r in rows:
        payload.append({
            "horizon_months": r.horizon,
            "model": r.model,
            "mape_pct": r.mape,
            "clusters_scored": r.mape_used,
            "clusters_excluded_zero": r.mape_excluded,
            "direction_accuracy_pct": r.direction_accuracy,
            "filtered": {"retained": r.filtered.retained, "total": r.filtered.total,
                         "direction_accuracy_pct": r.filtered.direction_accuracy},
        })
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
