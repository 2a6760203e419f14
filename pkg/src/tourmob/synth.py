"""Seeded synthetic check-in scenarios with known tourist/resident ground truth.

Residents stay in one city for at least the home threshold. Tourists keep a
home city elsewhere (a long, sparse stay) and make a short, spatially
concentrated visit to another city. Optional planted profiles bias which
venue subcategories a user visits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .classify import RESIDENT, TOURIST
from .exceptions import ConfigError
from .ingest import CheckIn, Venue, CategoryMap, remap_category, write_checkins, write_venues
from .mobility import haversine_array

# (subcategory, raw category, is_attraction)
SUBCATEGORY_CATALOG = (
    ("Museum", "Arts & Entertainment", True),
    ("Historic Site", "Arts & Entertainment", True),
    ("Monument / Landmark", "Arts & Entertainment", True),
    ("Palace", "Arts & Entertainment", True),
    ("Art Gallery", "Arts & Entertainment", True),
    ("Arcade", "Arts & Entertainment", False),
    ("Movie Theater", "Arts & Entertainment", False),
    ("Festival", "Event", True),
    ("Nightclub", "Nightlife Spot", False),
    ("Bar", "Nightlife Spot", False),
    ("Pub", "Nightlife Spot", False),
    ("Coffee Shop", "Food", False),
    ("Café", "Food", False),
    ("Burger Joint", "Food", False),
    ("Pizza Place", "Food", False),
    ("Japanese Restaurant", "Food", False),
    ("Brazilian Restaurant", "Food", False),
    ("Ramen / Noodle House", "Food", False),
    ("Home (private)", "Residences", False),
    ("Office", "Professional & Other Places", False),
    ("Government Building", "Professional & Other Places", False),
    ("Hospital", "Professional & Other Places", False),
    ("Church", "Professional & Other Places", True),
    ("University", "College & University", False),
    ("School", "Professional & Other Places", False),
    ("Beach", "Outdoors & Recreation", True),
    ("Park", "Outdoors & Recreation", True),
    ("Plaza", "Outdoors & Recreation", True),
    ("Gym / Fitness Center", "Outdoors & Recreation", False),
    ("Stadium", "Arts & Entertainment", True),
    ("Mall", "Shop & Service", False),
    ("Electronics Store", "Shop & Service", False),
    ("Convenience Store", "Shop & Service", False),
    ("Salon / Barbershop", "Shop & Service", False),
    ("Train Station", "Travel & Transport", False),
    ("Subway", "Travel & Transport", False),
    ("Bus Station", "Travel & Transport", False),
    ("Hotel", "Travel & Transport", True),
    ("Airport", "Travel & Transport", True),
)

RESIDENT_HOUR_WEIGHTS = tuple(
    5.0 if h in (8, 9, 12, 13, 18, 19) else 1.0 if 7 <= h <= 22 else 0.2 for h in range(24)
)
TOURIST_HOUR_WEIGHTS = tuple(2.0 if 9 <= h <= 21 else 0.3 for h in range(24))


@dataclass
class CitySpec:
    name: str
    bbox: tuple[float, float, float, float]  # south, west, north, east
    venue_count: int = 150
    utc_offset_hours: float = 0.0


@dataclass
class ResidentSpec:
    users_per_city: int = 20
    span_days: tuple[int, int] = (21, 60)
    checkins_per_day: float = 1.0


@dataclass
class TouristSpec:
    users_per_city: int = 10
    visit_days: tuple[int, int] = (1, 10)
    checkins_per_day: float = 3.0
    concentration_radius_km: float = 2.0
    attraction_weight: float = 4.0
    home_span_days: tuple[int, int] = (25, 40)
    home_checkins: int = 3


@dataclass
class TopicSpec:
    name: str
    subcategories: dict[str, float]


@dataclass
class ScenarioConfig:
    seed: int = 0
    start_date: date = date(2014, 4, 1)
    cities: list[CitySpec] = field(default_factory=list)
    residents: ResidentSpec = field(default_factory=ResidentSpec)
    tourists: TouristSpec = field(default_factory=TouristSpec)
    topics: list[TopicSpec] = field(default_factory=list)
    home_threshold_days: int = 21

    def validate(self) -> None:
        if not self.cities:
            raise ConfigError("scenario needs at least one city")
        names = [c.name for c in self.cities]
        if len(set(names)) != len(names):
            raise ConfigError("city names must be unique")
        for c in self.cities:
            s, w, n, e = c.bbox
            if not (-90 <= s < n <= 90 and -180 <= w < e <= 180):
                raise ConfigError(f"city {c.name}: invalid bounding box {c.bbox}")
            if c.venue_count < 1:
                raise ConfigError(f"city {c.name}: venue_count must be >= 1")
            if not -14 <= c.utc_offset_hours <= 14:
                raise ConfigError(f"city {c.name}: utc_offset_hours out of range")
        r, t = self.residents, self.tourists
        th = self.home_threshold_days
        if r.users_per_city < 0 or t.users_per_city < 0:
            raise ConfigError("user counts must be >= 0")
        if r.checkins_per_day <= 0 or t.checkins_per_day <= 0:
            raise ConfigError("check-in rates must be > 0")
        lo, hi = r.span_days
        if lo > hi:
            raise ConfigError("residents.span_days must be (min, max) with min <= max")
        if lo < th:
            raise ConfigError(f"residents.span_days minimum {lo} is below the {th}-day home threshold")
        lo, hi = t.visit_days
        if lo < 0 or lo > hi:
            raise ConfigError("tourists.visit_days must be (min, max) with 0 <= min <= max")
        if hi >= th:
            raise ConfigError(f"tourists.visit_days maximum {hi} must stay below the {th}-day home threshold")
        lo, hi = t.home_span_days
        if lo > hi or lo < th:
            raise ConfigError(f"tourists.home_span_days must be at least {th} days")
        if t.home_checkins < 2:
            raise ConfigError("tourists.home_checkins must be >= 2 to span the home stay")
        if t.concentration_radius_km <= 0:
            raise ConfigError("tourists.concentration_radius_km must be > 0")
        if t.attraction_weight <= 0:
            raise ConfigError("tourists.attraction_weight must be > 0")
        if t.users_per_city > 0 and len(self.cities) < 2:
            raise ConfigError("tourists need at least two cities: one to visit and one to live in")
        known = {s for s, _, _ in SUBCATEGORY_CATALOG}
        for topic in self.topics:
            if not topic.subcategories:
                raise ConfigError(f"topic {topic.name}: empty subcategory mixture")
            bad = set(topic.subcategories) - known
            if bad:
                raise ConfigError(f"topic {topic.name}: unknown subcategories {sorted(bad)}")
            if any(w <= 0 for w in topic.subcategories.values()):
                raise ConfigError(f"topic {topic.name}: weights must be > 0")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a mapping")
        try:
            cfg = cls(
                seed=int(data.get("seed", 0)),
                start_date=_to_date(data.get("start_date", "2014-04-01")),
                cities=[
                    CitySpec(
                        name=str(c["name"]),
                        bbox=tuple(float(x) for x in c["bbox"]),
                        venue_count=int(c.get("venue_count", 150)),
                        utc_offset_hours=float(c.get("utc_offset_hours", 0.0)),
                    )
                    for c in data.get("cities", [])
                ],
                residents=ResidentSpec(**_tuples(data.get("residents") or {})),
                tourists=TouristSpec(**_tuples(data.get("tourists") or {})),
                topics=[
                    TopicSpec(str(t["name"]), {str(k): float(v) for k, v in t["subcategories"].items()})
                    for t in data.get("topics") or []
                ],
                home_threshold_days=int(data.get("home_threshold_days", 21)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scenario config: {exc}") from exc
        for c in cfg.cities:
            if len(c.bbox) != 4:
                raise ConfigError(f"city {c.name}: bbox needs 4 numbers (south, west, north, east)")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read scenario config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"scenario config is not valid YAML: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start_date"] = self.start_date.isoformat()
        return d


def _to_date(value) -> date:
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


def _tuples(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def default_scenario(seed: int = 0, residents: int = 20, tourists: int = 10, venues: int = 150) -> ScenarioConfig:
    """Three cities with a handful of planted profiles."""
    cfg = ScenarioConfig(
        seed=seed,
        cities=[
            CitySpec("london", (51.40, -0.30, 51.60, 0.10), venues, 1.0),
            CitySpec("newyork", (40.60, -74.05, 40.85, -73.85), venues, -4.0),
            CitySpec("rio", (-23.05, -43.45, -22.85, -43.15), venues, -3.0),
        ],
        residents=ResidentSpec(users_per_city=residents),
        tourists=TouristSpec(users_per_city=tourists),
        topics=[
            TopicSpec("commuter", {"Train Station": 4, "Subway": 3, "Bus Station": 2, "Convenience Store": 1}),
            TopicSpec("food", {"Japanese Restaurant": 3, "Ramen / Noodle House": 3, "Bar": 2, "Pizza Place": 1}),
            TopicSpec("leisure", {"Beach": 3, "Hotel": 2, "Museum": 2, "Park": 2}),
        ],
    )
    cfg.validate()
    return cfg


@dataclass
class Scenario:
    config: ScenarioConfig
    venues: list[Venue]
    checkins: list[CheckIn]
    ground_truth: pd.DataFrame


class _City:
    def __init__(self, spec: CitySpec, venues: list[Venue], attraction: np.ndarray):
        self.spec = spec
        self.venues = venues
        self.attraction = attraction
        self.lat = np.array([v.lat for v in venues])
        self.lon = np.array([v.lon for v in venues])
        self.by_subcategory: dict[str, list[int]] = {}
        for i, v in enumerate(venues):
            self.by_subcategory.setdefault(v.subcategory, []).append(i)
        self.tz = timezone(timedelta(hours=spec.utc_offset_hours))


def _make_venues(rng, spec: CitySpec, required: list[str], category_map: CategoryMap) -> _City:
    catalog = {s: (c, a) for s, c, a in SUBCATEGORY_CATALOG}
    names = [s for s, _, _ in SUBCATEGORY_CATALOG]
    subcats = list(required)
    # at least one attraction so every tourist has a centre
    if not any(catalog[s][1] for s in subcats):
        subcats.append(names[0])
    while len(subcats) < spec.venue_count:
        subcats.append(names[int(rng.integers(len(names)))])
    s, w, n, e = spec.bbox
    lats = rng.uniform(s, n, size=len(subcats))
    lons = rng.uniform(w, e, size=len(subcats))
    venues = []
    for i, (sub, la, lo) in enumerate(zip(subcats, lats, lons)):
        raw = catalog[sub][0]
        venues.append(
            Venue(
                venue_id=f"{spec.name}-v{i:04d}",
                name=f"{sub} {spec.name.title()} {i}",
                city=spec.name,
                lat=round(float(la), 6),
                lon=round(float(lo), 6),
                subcategory=sub,
                category=remap_category(raw, sub, category_map),
                raw_category=raw,
            )
        )
    attraction = np.array([catalog[v.subcategory][1] for v in venues])
    return _City(spec, venues, attraction)


def _day_counts(rng, n_days: int, rate: float) -> np.ndarray:
    """Check-ins per day over ``n_days + 1`` days; first and last day get at least one."""
    counts = rng.poisson(rate, size=n_days + 1)
    counts[0] = max(counts[0], 1)
    counts[-1] = max(counts[-1], 1)
    return counts


def _times(rng, city: _City, day0: date, counts, hour_weights) -> list[datetime]:
    p = np.asarray(hour_weights, dtype=float)
    p /= p.sum()
    out = []
    for offset, k in enumerate(counts):
        if k == 0:
            continue
        day = day0 + timedelta(days=offset)
        hours = rng.choice(24, size=k, p=p)
        minutes = rng.integers(0, 60, size=k)
        seconds = rng.integers(0, 60, size=k)
        for h, m, s in sorted(zip(hours.tolist(), minutes.tolist(), seconds.tolist())):
            out.append(datetime(day.year, day.month, day.day, h, m, s, tzinfo=city.tz))
    return out


def _pick_venues(rng, city: _City, n: int, eligible: np.ndarray, weights: np.ndarray, topic: TopicSpec | None):
    eligible_set = set(eligible.tolist())
    w = weights / weights.sum()
    picks = []
    if topic is not None:
        subs = list(topic.subcategories)
        tp = np.array([topic.subcategories[s] for s in subs], dtype=float)
        tp /= tp.sum()
    for _ in range(n):
        choice = None
        if topic is not None:
            sub = subs[int(rng.choice(len(subs), p=tp))]
            options = [i for i in city.by_subcategory.get(sub, []) if i in eligible_set]
            if options:
                choice = options[int(rng.integers(len(options)))]
        if choice is None:
            choice = int(eligible[int(rng.choice(len(eligible), p=w))])
        picks.append(choice)
    return picks


def generate(config: ScenarioConfig, category_map: CategoryMap | None = None) -> Scenario:
    """Build venues, check-ins and ground truth; deterministic for a given config."""
    config.validate()
    if category_map is None:
        category_map = CategoryMap.load()
    rng = np.random.default_rng(config.seed)
    required = sorted({s for t in config.topics for s in t.subcategories})
    # two venues per planted subcategory keep the planted signal visible
    cities = [_make_venues(rng, spec, required * 2, category_map) for spec in config.cities]
    records: list[tuple[str, datetime, Venue]] = []
    truth = []
    r, t = config.residents, config.tourists

    for ci, city in enumerate(cities):
        n_venues = len(city.venues)
        all_idx = np.arange(n_venues)
        for u in range(r.users_per_city):
            user = f"{city.spec.name}-r{u:04d}"
            topic_i = int(rng.integers(len(config.topics))) if config.topics else None
            topic = config.topics[topic_i] if topic_i is not None else None
            span = int(rng.integers(r.span_days[0], r.span_days[1] + 1))
            day0 = config.start_date + timedelta(days=int(rng.integers(0, 30)))
            times = _times(rng, city, day0, _day_counts(rng, span, r.checkins_per_day), RESIDENT_HOUR_WEIGHTS)
            picks = _pick_venues(rng, city, len(times), all_idx, np.ones(n_venues), topic)
            records.extend((user, ts, city.venues[i]) for ts, i in zip(times, picks))
            truth.append((user, RESIDENT, city.spec.name, city.spec.name, topic.name if topic else "", "", "", ""))

        for u in range(t.users_per_city):
            user = f"{city.spec.name}-t{u:04d}"
            topic_i = int(rng.integers(len(config.topics))) if config.topics else None
            topic = config.topics[topic_i] if topic_i is not None else None
            others = [j for j in range(len(cities)) if j != ci]
            home = cities[others[int(rng.integers(len(others)))]]
            home_span = int(rng.integers(t.home_span_days[0], t.home_span_days[1] + 1))
            home_day0 = config.start_date + timedelta(days=int(rng.integers(0, 10)))
            offsets = sorted({0, home_span} | set(rng.integers(0, home_span + 1, size=t.home_checkins - 2).tolist()))
            home_counts = np.zeros(home_span + 1, dtype=int)
            home_counts[offsets] = 1
            home_times = _times(rng, home, home_day0, home_counts, RESIDENT_HOUR_WEIGHTS)
            home_picks = _pick_venues(rng, home, len(home_times), np.arange(len(home.venues)), np.ones(len(home.venues)), None)
            records.extend((user, ts, home.venues[i]) for ts, i in zip(home_times, home_picks))

            centre = int(rng.choice(np.flatnonzero(city.attraction)))
            dist = haversine_array(city.lat, city.lon, city.lat[centre], city.lon[centre])
            eligible = np.flatnonzero(dist <= t.concentration_radius_km)
            weights = np.where(city.attraction[eligible], t.attraction_weight, 1.0)
            visit = int(rng.integers(t.visit_days[0], t.visit_days[1] + 1))
            visit_day0 = home_day0 + timedelta(days=home_span + 1 + int(rng.integers(0, 5)))
            times = _times(rng, city, visit_day0, _day_counts(rng, visit, t.checkins_per_day), TOURIST_HOUR_WEIGHTS)
            picks = _pick_venues(rng, city, len(times), eligible, weights, topic)
            records.extend((user, ts, city.venues[i]) for ts, i in zip(times, picks))
            truth.append(
                (
                    user,
                    TOURIST,
                    home.spec.name,
                    city.spec.name,
                    topic.name if topic else "",
                    t.concentration_radius_km,
                    city.venues[centre].lat,
                    city.venues[centre].lon,
                )
            )

    records.sort(key=lambda rec: (rec[0], rec[1].timestamp(), rec[2].venue_id))
    checkins = [
        CheckIn(f"c{i:07d}", user, v.venue_id, ts, v.lat, v.lon) for i, (user, ts, v) in enumerate(records)
    ]
    gt = pd.DataFrame(
        truth,
        columns=["user_id", "class", "home_city", "city", "planted_topic", "radius_km", "center_lat", "center_lon"],
    ).sort_values("user_id", kind="mergesort", ignore_index=True)
    venues = [v for c in cities for v in c.venues]
    return Scenario(config, venues, checkins, gt)


def write_scenario(scenario: Scenario, out_dir) -> dict[str, Path]:
    """Write checkins.csv, venues.csv and ground_truth.csv into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "checkins": out / "checkins.csv",
        "venues": out / "venues.csv",
        "ground_truth": out / "ground_truth.csv",
    }
    write_checkins(scenario.checkins, paths["checkins"])
    write_venues(scenario.venues, paths["venues"])
    scenario.ground_truth.to_csv(paths["ground_truth"], index=False, lineterminator="\n")
    return paths
