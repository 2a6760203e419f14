"""Home-city inference from stay spans and tourist/resident labelling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .validation import check_checkin_frame

logger = logging.getLogger(__name__)

TOURIST = "Tourist"
RESIDENT = "Resident"
EXCLUDED = "Excluded"
LABELS = (TOURIST, RESIDENT, EXCLUDED)


@dataclass(frozen=True)
class StaySpan:
    user_id: str
    city: str
    first_checkin: int
    last_checkin: int
    days: int
    checkin_count: int


@dataclass(frozen=True)
class UserClassification:
    user_id: str
    home_city: str | None
    spans: tuple[StaySpan, ...] = field(default=())

    @property
    def max_days(self) -> int:
        return max((s.days for s in self.spans), default=0)


def compute_stay_spans(checkins: pd.DataFrame) -> list[StaySpan]:
    """One span per (user, city): first and last check-in and the calendar-day gap.

    ``first_checkin``/``last_checkin`` are epoch seconds; ``days`` is the
    difference between the local calendar dates of those two check-ins.
    Rows without a city are skipped with a warning.
    """
    check_checkin_frame(checkins, ["user_id", "city", "epoch", "local_date"])
    frame = checkins
    no_city = frame["city"].isna() | (frame["city"].astype(str) == "")
    if no_city.any():
        logger.warning("skipping %d check-in(s) without a resolvable city", int(no_city.sum()))
        frame = frame[~no_city]
    if frame.empty:
        return []
    # local_date of the earliest/latest instant, not min/max of local dates
    ordered = frame.sort_values(["user_id", "city", "epoch", "local_date"], kind="mergesort")
    grouped = ordered.groupby(["user_id", "city"], sort=True)
    first = grouped.first()
    last = grouped.last()
    counts = grouped.size()
    spans = []
    for (user, city), n in counts.items():
        spans.append(
            StaySpan(
                user_id=str(user),
                city=str(city),
                first_checkin=int(first.at[(user, city), "epoch"]),
                last_checkin=int(last.at[(user, city), "epoch"]),
                days=int(last.at[(user, city), "local_date"] - first.at[(user, city), "local_date"]),
                checkin_count=int(n),
            )
        )
    return spans


def classify_user(spans, threshold_days: int = 21) -> UserClassification:
    """Pick the city with the longest stay, provided it lasts ``threshold_days``.

    Ties on days go to the span with more check-ins, then the smaller city id.
    """
    spans = tuple(spans)
    if not spans:
        raise ValueError("classify_user needs at least one stay span")
    users = {s.user_id for s in spans}
    if len(users) != 1:
        raise ValueError(f"spans belong to several users: {sorted(users)}")
    best = min(spans, key=lambda s: (-s.days, -s.checkin_count, s.city))
    home = best.city if best.days >= threshold_days else None
    ordered = tuple(sorted(spans, key=lambda s: s.city))
    return UserClassification(user_id=best.user_id, home_city=home, spans=ordered)


def label_checkin(home_city: str | None, city: str) -> str:
    if home_city is None:
        return EXCLUDED
    return RESIDENT if city == home_city else TOURIST


def label_checkins(classification: UserClassification, checkins: pd.DataFrame) -> list[str]:
    """Label each of one user's check-ins relative to that user's home city."""
    return [label_checkin(classification.home_city, city) for city in checkins["city"]]


class HomeCityClassifier(BaseEstimator, TransformerMixin):
    """Infer each user's home city and label check-ins as tourist or resident activity.

    Parameters
    ----------
    threshold_days : int, default=21
        Minimum first-to-last stay (in calendar days) for a city to count
        as home.

    Attributes
    ----------
    classifications_ : dict
        ``user_id -> UserClassification``.
    spans_ : list of StaySpan
    """

    def __init__(self, threshold_days: int = 21):
        self.threshold_days = threshold_days

    def fit(self, X, y=None):
        if not isinstance(self.threshold_days, (int, np.integer)) or self.threshold_days < 1:
            raise ValueError(f"threshold_days must be a positive integer, got {self.threshold_days!r}")
        spans = compute_stay_spans(X)
        by_user: dict[str, list[StaySpan]] = {}
        for span in spans:
            by_user.setdefault(span.user_id, []).append(span)
        self.spans_ = spans
        self.classifications_ = {
            user: classify_user(user_spans, self.threshold_days) for user, user_spans in sorted(by_user.items())
        }
        return self

    def home_cities(self) -> dict[str, str | None]:
        check_is_fitted(self, "classifications_")
        return {u: c.home_city for u, c in self.classifications_.items()}

    def predict(self, X) -> np.ndarray:
        """Per-check-in label: Tourist, Resident or Excluded."""
        check_is_fitted(self, "classifications_")
        check_checkin_frame(X, ["user_id", "city"])
        homes = self.home_cities()
        labels = [label_checkin(homes.get(str(u)), c) for u, c in zip(X["user_id"], X["city"])]
        return np.asarray(labels, dtype=object)

    def transform(self, X) -> pd.DataFrame:
        """Return a copy of ``X`` with ``home_city`` and ``label`` columns."""
        labels = self.predict(X)
        homes = self.home_cities()
        out = X.copy()
        out["home_city"] = [homes.get(str(u)) for u in X["user_id"]]
        out["label"] = labels
        return out

    def users_frame(self) -> pd.DataFrame:
        check_is_fitted(self, "classifications_")
        rows = [(u, c.home_city, c.max_days) for u, c in self.classifications_.items()]
        return pd.DataFrame(rows, columns=["user_id", "home_city", "max_days"])
