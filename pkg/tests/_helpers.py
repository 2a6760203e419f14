"""Small builders shared by the test modules."""

from __future__ import annotations

from tourmob.ingest import CheckIn, Venue, checkins_frame, parse_timestamp


def venue(vid, city="A", lat=0.0, lon=0.0, sub="Coffee Shop", cat="restaurants", name=None):
    return Venue(vid, name or vid, city, lat, lon, sub, cat, "Food")


def make_frame(rows, venues=None):
    """rows: (user, venue_id, timestamp text[, city]) tuples.

    Unknown venues are created on the fly at (0, 0) in the row's city.
    """
    catalog = {v.venue_id: v for v in (venues or [])}
    checkins = []
    for i, row in enumerate(rows):
        user, vid, ts = row[:3]
        city = row[3] if len(row) > 3 else "A"
        if vid not in catalog:
            catalog[vid] = venue(vid, city)
        v = catalog[vid]
        checkins.append(CheckIn(f"c{i:05d}", user, vid, parse_timestamp(ts), v.lat, v.lon))
    return checkins_frame(checkins, catalog)
