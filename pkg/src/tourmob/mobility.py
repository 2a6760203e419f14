"""Great-circle mobility metrics: mean displacement and radius of gyration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_checkin_frame, check_positive_int

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class MobilitySummary:
    user_id: str
    city: str
    label: str
    checkin_count: int
    mean_displacement_km: float
    radius_gyration_km: float | None
    center_of_mass: GeoPoint


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    return float(haversine_array(a.lat, a.lon, b.lat, b.lon))


def haversine_array(lat1, lon1, lat2, lon2):
    """Vectorised haversine distance in km (R = 6371 km)."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    h = np.sin((lat2 - lat1) / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    # clip guards against h drifting just past 1 for antipodal points
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def mean_displacement(lats, lons, denominator: str = "checkins") -> float:
    """Summed distance between consecutive check-ins divided by the check-in count.

    Points must already be in chronological order. ``denominator="transitions"``
    divides by N - 1 instead (0 is returned for a single check-in).
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    n = lats.shape[0]
    if n == 0:
        raise ValueError("mean displacement is undefined for a user without check-ins")
    if lons.shape[0] != n:
        raise ValueError("lats and lons must have the same length")
    if denominator not in ("checkins", "transitions"):
        raise ValueError(f"denominator must be 'checkins' or 'transitions', got {denominator!r}")
    total = float(np.sum(haversine_array(lats[:-1], lons[:-1], lats[1:], lons[1:]))) if n > 1 else 0.0
    if denominator == "transitions":
        return total / (n - 1) if n > 1 else 0.0
    return total / n


def center_of_mass(lats, lons) -> GeoPoint:
    """Check-in weighted mean of latitude and longitude in degrees."""
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    if lats.shape[0] == 0:
        raise ValueError("center of mass of an empty set")
    return GeoPoint(float(np.mean(lats)), float(np.mean(lons)))


def radius_of_gyration(lats, lons, venue_ids=None, min_checkins: int = 5) -> float | None:
    """Radius of gyration in km, or ``None`` for users with fewer than ``min_checkins``.

    Each distinct location (grouped by ``venue_ids`` when given, else by the
    coordinate pair) contributes its check-in count times its squared distance
    to the center of mass; the sum is divided by the total count N.
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    n = lats.shape[0]
    if n < min_checkins or n == 0:
        return None
    keys = list(zip(lats.tolist(), lons.tolist())) if venue_ids is None else list(venue_ids)
    # the first coordinate seen for a venue represents it
    index: dict = {}
    counts: list[int] = []
    site_lat: list[float] = []
    site_lon: list[float] = []
    for key, la, lo in zip(keys, lats, lons):
        i = index.get(key)
        if i is None:
            index[key] = len(counts)
            counts.append(1)
            site_lat.append(la)
            site_lon.append(lo)
        else:
            counts[i] += 1
    w = np.asarray(counts, dtype=float)
    site_lat_a = np.asarray(site_lat)
    site_lon_a = np.asarray(site_lon)
    cm_lat = float(np.dot(w, site_lat_a) / n)
    cm_lon = float(np.dot(w, site_lon_a) / n)
    d = haversine_array(site_lat_a, site_lon_a, cm_lat, cm_lon)
    return math.sqrt(float(np.dot(w, d * d)) / n)


class MobilityMetrics(BaseEstimator, TransformerMixin):
    """Per (user, city, label) mean displacement and radius of gyration.

    ``transform`` takes a labelled check-in table and returns one row per
    (user, city, label) group. ``coordinates`` selects venue catalog
    coordinates (``"venue"``) or the raw check-in coordinates.
    """

    def __init__(self, min_checkins: int = 5, denominator: str = "checkins", coordinates: str = "venue"):
        self.min_checkins = min_checkins
        self.denominator = denominator
        self.coordinates = coordinates

    def fit(self, X, y=None):
        check_positive_int(self.min_checkins, "min_checkins")
        if self.coordinates not in ("venue", "checkin"):
            raise ValueError(f"coordinates must be 'venue' or 'checkin', got {self.coordinates!r}")
        if self.denominator not in ("checkins", "transitions"):
            raise ValueError(f"denominator must be 'checkins' or 'transitions', got {self.denominator!r}")
        self.n_features_in_ = 0
        return self

    def summaries(self, X) -> list[MobilitySummary]:
        lat_col, lon_col = ("venue_lat", "venue_lon") if self.coordinates == "venue" else ("lat", "lon")
        check_checkin_frame(X, ["user_id", "city", "label", "epoch", "venue_id", lat_col, lon_col])
        out = []
        keys = ["user_id", "epoch", "checkin_id"] if "checkin_id" in X else ["user_id", "epoch"]
        ordered = X.sort_values(keys, kind="mergesort")
        for (user, city, label), g in ordered.groupby(["user_id", "city", "label"], sort=True):
            lats = g[lat_col].to_numpy()
            lons = g[lon_col].to_numpy()
            out.append(
                MobilitySummary(
                    user_id=str(user),
                    city=str(city),
                    label=str(label),
                    checkin_count=len(g),
                    mean_displacement_km=mean_displacement(lats, lons, self.denominator),
                    radius_gyration_km=radius_of_gyration(lats, lons, g["venue_id"].tolist(), self.min_checkins),
                    center_of_mass=center_of_mass(lats, lons),
                )
            )
        return out

    def transform(self, X) -> pd.DataFrame:
        rows = [
            (
                s.user_id,
                s.city,
                s.label,
                s.checkin_count,
                s.mean_displacement_km,
                np.nan if s.radius_gyration_km is None else s.radius_gyration_km,
                s.center_of_mass.lat,
                s.center_of_mass.lon,
            )
            for s in self.summaries(X)
        ]
        return pd.DataFrame(
            rows,
            columns=[
                "user_id",
                "city",
                "class",
                "n_checkins",
                "mean_displacement_km",
                "radius_gyration_km",
                "center_lat",
                "center_lon",
            ],
        )


def empirical_cdf(values) -> pd.DataFrame:
    """Sorted samples with their cumulative fraction (i / n)."""
    v = np.sort(np.asarray(values, dtype=float))
    v = v[~np.isnan(v)]
    n = v.shape[0]
    return pd.DataFrame({"value": v, "fraction": np.arange(1, n + 1) / n if n else np.empty(0)})
