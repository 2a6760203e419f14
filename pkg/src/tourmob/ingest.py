"""Check-in and venue file ingestion, plus the venue category remapping."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
import yaml

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

CATEGORIES = (
    "arts",
    "entertainment",
    "city",
    "health",
    "professional",
    "religion",
    "drink",
    "fastfood",
    "restaurants",
    "home",
    "outdoors",
    "sports",
    "school",
    "services",
    "shopping",
    "transport",
    "travel",
)

CHECKIN_FIELDS = ("checkin_id", "user_id", "venue_id", "timestamp", "lat", "lon")
VENUE_FIELDS = ("venue_id", "name", "city", "lat", "lon", "category", "subcategory")
FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class CheckIn:
    checkin_id: str
    user_id: str
    venue_id: str
    timestamp: datetime
    lat: float
    lon: float

    def as_record(self) -> dict:
        return {
            "checkin_id": self.checkin_id,
            "user_id": self.user_id,
            "venue_id": self.venue_id,
            "timestamp": format_timestamp(self.timestamp),
            "lat": self.lat,
            "lon": self.lon,
        }


@dataclass(frozen=True)
class Venue:
    venue_id: str
    name: str
    city: str
    lat: float
    lon: float
    subcategory: str
    category: str
    raw_category: str = ""


@dataclass(frozen=True)
class RejectedRecord:
    line: int
    reason: str


@dataclass(frozen=True)
class CategoryRule:
    target: str
    category: str | None = None
    subcategory: str | None = None
    pattern: str | None = None

    def matches(self, raw_category: str, raw_subcategory: str) -> bool:
        if self.category is not None and self.category.casefold() != raw_category.casefold():
            return False
        if self.subcategory is not None and self.subcategory.casefold() != raw_subcategory.casefold():
            return False
        if self.pattern is not None and not re.search(self.pattern, raw_subcategory, re.IGNORECASE):
            return False
        return True


@dataclass(frozen=True)
class CategoryMap:
    """Ordered first-match-wins rules from raw (category, subcategory) to a label.

    ``default_target`` makes the map total.
    """

    rules: tuple[CategoryRule, ...] = ()
    default_target: str = "services"

    def __post_init__(self):
        if self.default_target not in CATEGORIES:
            raise ConfigError(f"default_target {self.default_target!r} is not a known category")
        for i, rule in enumerate(self.rules):
            if rule.target not in CATEGORIES:
                raise ConfigError(f"rule {i} targets unknown category {rule.target!r}")
            if rule.category is None and rule.subcategory is None and rule.pattern is None:
                raise ConfigError(f"rule {i} has no matcher")
            if rule.pattern is not None:
                try:
                    re.compile(rule.pattern)
                except re.error as exc:
                    raise ConfigError(f"rule {i} has an invalid pattern: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "CategoryMap":
        if not isinstance(data, dict):
            raise ConfigError("category map must be a mapping with 'rules' and 'default_target'")
        unknown = set(data) - {"rules", "default_target"}
        if unknown:
            raise ConfigError(f"unknown category map keys: {sorted(unknown)}")
        rules = []
        for i, raw in enumerate(data.get("rules") or []):
            if not isinstance(raw, dict) or "target" not in raw:
                raise ConfigError(f"rule {i} must be a mapping with a 'target'")
            extra = set(raw) - {"target", "category", "subcategory", "pattern"}
            if extra:
                raise ConfigError(f"rule {i} has unknown keys {sorted(extra)}")
            rules.append(
                CategoryRule(
                    target=str(raw["target"]),
                    category=_opt_str(raw.get("category")),
                    subcategory=_opt_str(raw.get("subcategory")),
                    pattern=_opt_str(raw.get("pattern")),
                )
            )
        return cls(tuple(rules), str(data.get("default_target", "services")))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "CategoryMap":
        """Read a YAML (or JSON) map; ``None`` loads the bundled default."""
        if path is None:
            text = resources.files("tourmob").joinpath("data/category_map.yaml").read_text("utf-8")
        else:
            try:
                text = Path(path).read_text("utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read category map {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"category map is not valid YAML: {exc}") from exc
        return cls.from_dict(data)


def _opt_str(value) -> str | None:
    return None if value is None else str(value)


def remap_category(raw_category: str, raw_subcategory: str, category_map: CategoryMap) -> str:
    for rule in category_map.rules:
        if rule.matches(raw_category or "", raw_subcategory or ""):
            return rule.target
    logger.info(
        "no category rule for (%r, %r); using %s",
        raw_category,
        raw_subcategory,
        category_map.default_target,
    )
    return category_map.default_target


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError("timestamp lacks a UTC offset")
    return ts.replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.isoformat(timespec="seconds")


def _validate_checkin(raw: dict) -> CheckIn:
    missing = [k for k in CHECKIN_FIELDS if k not in raw]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    ids = {}
    for key in ("checkin_id", "user_id", "venue_id"):
        value = raw[key]
        value = "" if value is None else str(value).strip()
        if not value:
            raise ValueError(f"empty {key}")
        ids[key] = value
    try:
        ts = parse_timestamp(str(raw["timestamp"]))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad timestamp: {exc}") from None
    lat = _coordinate(raw["lat"], "lat", 90.0)
    lon = _coordinate(raw["lon"], "lon", 180.0)
    return CheckIn(timestamp=ts, lat=lat, lon=lon, **ids)


def _coordinate(value, name: str, bound: float) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} is not a number") from None
    if not math.isfinite(x) or not -bound <= x <= bound:
        raise ValueError(f"{name} out of range")
    return x


def _iter_csv(fh, path) -> Iterable[tuple[int, dict | None, str | None]]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        return
    header = [h.strip() for h in header]
    missing = [k for k in CHECKIN_FIELDS if k not in header]
    if missing:
        raise ConfigError(f"{path}: header lacks column(s) {', '.join(missing)}")
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            yield line, None, "empty record"
        elif len(row) != len(header):
            yield line, None, f"expected {len(header)} fields, got {len(row)}"
        else:
            yield line, dict(zip(header, row)), None


def _iter_jsonl(fh) -> Iterable[tuple[int, dict | None, str | None]]:
    for line, text in enumerate(fh, start=1):
        if not text.strip():
            yield line, None, "empty record"
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            yield line, None, f"invalid JSON: {exc.msg}"
            continue
        if not isinstance(obj, dict):
            yield line, None, "record is not a JSON object"
        else:
            yield line, obj, None


def parse_checkins(path: str | Path, format: str = "csv") -> tuple[list[CheckIn], list[RejectedRecord]]:
    """Parse a check-in file, collecting malformed records instead of failing.

    Line numbers in rejections are physical file lines (the CSV header is
    line 1). Accepted plus rejected always equals the number of data lines.
    """
    if format not in FORMATS:
        raise ConfigError(f"unsupported check-in format {format!r}; expected one of {FORMATS}")
    checkins: list[CheckIn] = []
    rejected: list[RejectedRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        rows = _iter_csv(fh, path) if format == "csv" else _iter_jsonl(fh)
        for line, raw, reason in rows:
            if raw is not None:
                try:
                    checkin = _validate_checkin(raw)
                except ValueError as exc:
                    reason = str(exc)
                else:
                    if checkin.checkin_id in seen:
                        reason = f"duplicate checkin_id {checkin.checkin_id}"
                    else:
                        seen.add(checkin.checkin_id)
                        checkins.append(checkin)
                        continue
            rejected.append(RejectedRecord(line, reason))
    if rejected:
        logger.warning("%s: rejected %d of %d records", path, len(rejected), len(rejected) + len(checkins))
    return checkins, rejected


def write_checkins(checkins: Iterable[CheckIn], path: str | Path, format: str = "csv") -> None:
    if format not in FORMATS:
        raise ConfigError(f"unsupported check-in format {format!r}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if format == "csv":
            writer = csv.DictWriter(fh, fieldnames=CHECKIN_FIELDS, lineterminator="\n")
            writer.writeheader()
            for c in checkins:
                writer.writerow(c.as_record())
        else:
            for c in checkins:
                fh.write(json.dumps(c.as_record(), ensure_ascii=False) + "\n")


def load_venues(
    path: str | Path, category_map: CategoryMap | None = None
) -> tuple[dict[str, Venue], list[RejectedRecord]]:
    """Read the venue catalog and attach the remapped category to each venue.

    The ``category`` column of the file holds the raw top-level category;
    the returned ``Venue.category`` is the remapped label.
    """
    if category_map is None:
        category_map = CategoryMap.load()
    catalog: dict[str, Venue] = {}
    rejected: list[RejectedRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [k for k in VENUE_FIELDS if k not in (reader.fieldnames or [])]
        if reader.fieldnames is not None and missing:
            raise ConfigError(f"{path}: header lacks column(s) {', '.join(missing)}")
        for row in reader:
            line = reader.line_num
            venue_id = (row.get("venue_id") or "").strip()
            if not venue_id:
                rejected.append(RejectedRecord(line, "empty venue_id"))
                continue
            try:
                lat = _coordinate(row.get("lat"), "lat", 90.0)
                lon = _coordinate(row.get("lon"), "lon", 180.0)
            except ValueError as exc:
                rejected.append(RejectedRecord(line, f"missing or bad coordinates: {exc}"))
                continue
            city = (row.get("city") or "").strip()
            if not city:
                rejected.append(RejectedRecord(line, "empty city"))
                continue
            raw_category = (row.get("category") or "").strip()
            subcategory = (row.get("subcategory") or "").strip()
            if venue_id in catalog:
                logger.warning("duplicate venue_id %s at line %d; keeping the later record", venue_id, line)
            catalog[venue_id] = Venue(
                venue_id=venue_id,
                name=(row.get("name") or "").strip() or venue_id,
                city=city,
                lat=lat,
                lon=lon,
                subcategory=subcategory,
                category=remap_category(raw_category, subcategory, category_map),
                raw_category=raw_category,
            )
    return catalog, rejected


def write_venues(venues: Iterable[Venue], path: str | Path, remapped: bool = False) -> None:
    """Write venues in the ingest schema.

    With ``remapped=True`` an extra ``label`` column carries the remapped
    category while ``category`` keeps the raw one, so the file can be
    re-ingested unchanged.
    """
    fields = list(VENUE_FIELDS) + (["label"] if remapped else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for v in venues:
            row = {
                "venue_id": v.venue_id,
                "name": v.name,
                "city": v.city,
                "lat": v.lat,
                "lon": v.lon,
                "category": v.raw_category,
                "subcategory": v.subcategory,
            }
            if remapped:
                row["label"] = v.category
            writer.writerow(row)


FRAME_COLUMNS = [
    "checkin_id",
    "user_id",
    "venue_id",
    "timestamp",
    "epoch",
    "local_date",
    "local_hour",
    "weekday",
    "lat",
    "lon",
    "city",
    "venue_name",
    "venue_lat",
    "venue_lon",
    "category",
    "subcategory",
]


def checkins_frame(checkins: Iterable[CheckIn], venues: dict[str, Venue]) -> pd.DataFrame:
    """Join check-ins with their venues into one table sorted by user and time.

    Local clock fields (``local_date`` as a proleptic ordinal, ``local_hour``,
    ``weekday`` with Monday=0) use each timestamp's own UTC offset. Check-ins
    whose venue is not in the catalog are dropped with a warning.
    """
    rows = []
    unresolved = 0
    for c in checkins:
        venue = venues.get(c.venue_id)
        if venue is None:
            unresolved += 1
            continue
        ts = c.timestamp
        rows.append(
            (
                c.checkin_id,
                c.user_id,
                c.venue_id,
                format_timestamp(ts),
                int(ts.timestamp()),
                ts.toordinal(),
                ts.hour,
                ts.weekday(),
                c.lat,
                c.lon,
                venue.city,
                venue.name,
                venue.lat,
                venue.lon,
                venue.category,
                venue.subcategory,
            )
        )
    if unresolved:
        logger.warning("skipped %d check-in(s) with an unknown venue_id", unresolved)
    frame = pd.DataFrame.from_records(rows, columns=FRAME_COLUMNS)
    frame = frame.astype(
        {
            "epoch": np.int64,
            "local_date": np.int64,
            "local_hour": np.int64,
            "weekday": np.int64,
            "lat": float,
            "lon": float,
            "venue_lat": float,
            "venue_lon": float,
        }
    )
    return frame.sort_values(["user_id", "epoch", "checkin_id"], kind="mergesort").reset_index(drop=True)
