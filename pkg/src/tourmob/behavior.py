"""Per (city, class) check-in statistics: intervals, venue rankings, hourly routines, categories."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .ingest import CATEGORIES
from .mobility import empirical_cdf
from .validation import check_checkin_frame, check_positive_int, select_slice

logger = logging.getLogger(__name__)

WEEKDAY = "weekday"
WEEKEND = "weekend"


@dataclass(frozen=True)
class IntervalDistribution:
    city: str | None
    label: str | None
    samples: np.ndarray
    dropped: int = 0

    def cdf(self) -> pd.DataFrame:
        return empirical_cdf(self.samples)


@dataclass(frozen=True)
class HourlyRoutine:
    city: str | None
    label: str | None
    daytype: str
    counts: np.ndarray


@dataclass(frozen=True)
class CategoryPopularity:
    city: str | None
    label: str | None
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def is_empty(self) -> bool:
        return self.total == 0

    def fractions(self) -> dict[str, float] | None:
        """Normalized counts, or ``None`` when there are no check-ins."""
        total = self.total
        if total == 0:
            return None
        return {c: n / total for c, n in self.counts.items()}


def _sorted_slice(checkins, city, label, columns) -> pd.DataFrame:
    check_checkin_frame(checkins, columns)
    frame = select_slice(checkins, city, label)
    cols = ["user_id", "epoch", "checkin_id"] if "checkin_id" in frame.columns else ["user_id", "epoch"]
    return frame.sort_values(cols, kind="mergesort")


def interval_distribution(checkins: pd.DataFrame, city=None, label=None) -> IntervalDistribution:
    """Hours between consecutive check-ins of the same user; zero gaps are dropped."""
    frame = _sorted_slice(checkins, city, label, ["user_id", "epoch", "city"])
    users = frame["user_id"].to_numpy()
    epoch = frame["epoch"].to_numpy(dtype=np.int64)
    same_user = users[1:] == users[:-1]
    gaps = (epoch[1:] - epoch[:-1])[same_user]
    dropped = int(np.sum(gaps == 0))
    if dropped:
        logger.warning("dropped %d zero-length interval(s) from duplicate timestamps", dropped)
    samples = gaps[gaps > 0] / 3600.0
    return IntervalDistribution(city, label, samples.astype(float), dropped)


def venue_ranking(checkins: pd.DataFrame, city=None, label=None, n: int | None = 10) -> list[tuple[str, str, int]]:
    """Most checked-in venues as (venue_id, name, count); ties by name, then id."""
    if n is not None:
        check_positive_int(n, "n")
    check_checkin_frame(checkins, ["venue_id", "venue_name", "city"])
    frame = select_slice(checkins, city, label)
    if frame.empty:
        return []
    counts = frame.groupby("venue_id", sort=False).agg(vname=("venue_name", "first"), n=("venue_id", "size"))
    rows = sorted(
        ((str(r.Index), str(r.vname), int(r.n)) for r in counts.itertuples()),
        key=lambda t: (-t[2], t[1], t[0]),
    )
    return rows if n is None else rows[:n]


def hourly_routine(checkins: pd.DataFrame, city=None, label=None, daytype: str = WEEKDAY) -> HourlyRoutine:
    """Check-in counts by local hour for weekdays (Mon-Fri) or weekends (Sat-Sun)."""
    if daytype not in (WEEKDAY, WEEKEND):
        raise ValueError(f"daytype must be {WEEKDAY!r} or {WEEKEND!r}, got {daytype!r}")
    check_checkin_frame(checkins, ["local_hour", "weekday", "city"])
    frame = select_slice(checkins, city, label)
    weekend = frame["weekday"].to_numpy() >= 5
    mask = weekend if daytype == WEEKEND else ~weekend
    counts = np.bincount(frame["local_hour"].to_numpy(dtype=np.int64)[mask], minlength=24)
    return HourlyRoutine(city, label, daytype, counts.astype(np.int64))


def category_popularity(checkins: pd.DataFrame, city=None, label=None) -> CategoryPopularity:
    """Check-ins per remapped category; uses the ``category`` column joined from the venues."""
    check_checkin_frame(checkins, ["category", "city"])
    frame = select_slice(checkins, city, label)
    observed = frame["category"].value_counts()
    unknown = set(observed.index) - set(CATEGORIES)
    if unknown:
        raise ValueError(f"check-ins carry unmapped categories: {sorted(unknown)}")
    counts = {c: int(observed.get(c, 0)) for c in CATEGORIES}
    return CategoryPopularity(city, label, counts)


# --- plot-ready tables --------------------------------------------------------


def _slices(checkins: pd.DataFrame, labels=None):
    frame = checkins if labels is None else checkins[checkins["label"].isin(labels)]
    pairs = frame[["city", "label"]].drop_duplicates()
    return sorted((str(c), str(l)) for c, l in pairs.itertuples(index=False))


def behavior_tables(checkins: pd.DataFrame, labels=("Resident", "Tourist"), top_n: int = 10) -> dict[str, pd.DataFrame]:
    """All behavior outputs for every (city, class) slice present in ``checkins``."""
    check_checkin_frame(checkins, ["city", "label"])
    counts, intervals, cdfs, routines, rankings, categories = [], [], [], [], [], []
    for city, label in _slices(checkins, labels):
        part = select_slice(checkins, city, label)
        counts.append((city, label, int(part["user_id"].nunique()), len(part)))
        dist = interval_distribution(part)
        intervals.extend((city, label, h) for h in dist.samples)
        cdf = dist.cdf()
        cdfs.extend((city, label, v, f) for v, f in zip(cdf["value"], cdf["fraction"]))
        for daytype in (WEEKDAY, WEEKEND):
            r = hourly_routine(part, daytype=daytype)
            routines.extend((city, label, daytype, hour, int(c)) for hour, c in enumerate(r.counts))
        for rank, (vid, name, n) in enumerate(venue_ranking(part, n=top_n), start=1):
            rankings.append((city, label, rank, vid, name, n))
        pop = category_popularity(part)
        fr = pop.fractions()
        for cat in CATEGORIES:
            categories.append((city, label, cat, pop.counts[cat], np.nan if fr is None else fr[cat]))
    points = (
        checkins[checkins["label"].isin(labels)]
        .groupby(["city", "label", "venue_id"], sort=True)
        .agg(name=("venue_name", "first"), lat=("venue_lat", "first"), lon=("venue_lon", "first"), count=("venue_id", "size"))
        .reset_index()
        .rename(columns={"label": "class", "venue_id": "venue"})
        if {"venue_lat", "venue_lon"} <= set(checkins.columns)
        else pd.DataFrame(columns=["city", "class", "venue", "name", "lat", "lon", "count"])
    )
    return {
        "checkin_counts": pd.DataFrame(counts, columns=["city", "class", "n_users", "n_checkins"]),
        "intervals": pd.DataFrame(intervals, columns=["city", "class", "hours"]),
        "intervals_cdf": pd.DataFrame(cdfs, columns=["city", "class", "hours", "fraction"]),
        "routines": pd.DataFrame(routines, columns=["city", "class", "daytype", "hour", "count"]),
        "rankings": pd.DataFrame(rankings, columns=["city", "class", "rank", "venue", "name", "count"]),
        "categories": pd.DataFrame(categories, columns=["city", "class", "category", "count", "fraction"]),
        "venue_points": points,
    }
