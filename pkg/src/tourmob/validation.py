"""Input checks shared by the estimators, in the spirit of sklearn's check_array."""

from __future__ import annotations

import pandas as pd


def check_checkin_frame(X, required) -> pd.DataFrame:
    """Make sure ``X`` is a check-in table carrying the ``required`` columns.

    Returns ``X`` unchanged so calls can be chained.
    """
    if not isinstance(X, pd.DataFrame):
        raise TypeError(
            f"expected a pandas DataFrame of check-ins (see tourmob.checkins_frame), got {type(X).__name__}"
        )
    missing = [c for c in required if c not in X.columns]
    if missing:
        raise ValueError(f"check-in table lacks column(s): {', '.join(missing)}")
    return X


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) and not hasattr(value, "__index__"):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def select_slice(X: pd.DataFrame, city=None, label=None) -> pd.DataFrame:
    """Rows for one (city, label) slice; ``None`` leaves that axis unfiltered."""
    mask = pd.Series(True, index=X.index)
    if city is not None:
        mask &= X["city"] == city
    if label is not None:
        mask &= X["label"] == label
    return X[mask]
