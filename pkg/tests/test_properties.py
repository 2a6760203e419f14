from datetime import datetime, timedelta, timezone

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tourmob.behavior import WEEKDAY, WEEKEND, category_popularity, hourly_routine, interval_distribution
from tourmob.classify import EXCLUDED, RESIDENT, TOURIST, HomeCityClassifier
from tourmob.ingest import CATEGORIES, CategoryMap, CheckIn, format_timestamp, parse_checkins, remap_category, write_checkins
from tourmob.mobility import radius_of_gyration
from tourmob.stgraph import betweenness_centrality, build_graph, closeness_centrality, degree_centrality

from _helpers import make_frame, venue

CMAP = CategoryMap.load()
text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=30)


@given(text, text)
def test_remap_total(cat, sub):
    assert remap_category(cat, sub, CMAP) in CATEGORIES


offsets = st.integers(-12 * 4, 14 * 4).map(lambda q: timezone(timedelta(minutes=15 * q)))
instants = st.builds(
    lambda s, tz: datetime(2014, 1, 1, tzinfo=timezone.utc).astimezone(tz) + timedelta(seconds=s),
    st.integers(0, 400 * 86400),
    offsets,
)
# valid ids are non-empty once surrounding whitespace is stripped
ids = st.text(st.characters(min_codepoint=33, max_codepoint=0x2FFF, blacklist_categories=("Cs",)), min_size=1, max_size=8).filter(
    lambda s: s == s.strip() and s != ""
)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(ids, ids, instants, st.floats(-90, 90), st.floats(-180, 180)),
        max_size=15,
    ),
    st.sampled_from(["csv", "jsonl"]),
)
def test_parse_round_trip(tmp_path_factory, rows, fmt):
    checkins = [CheckIn(f"c{i}", u, v, ts, lat, lon) for i, (u, v, ts, lat, lon) in enumerate(rows)]
    path = tmp_path_factory.mktemp("rt") / f"x.{fmt}"
    write_checkins(checkins, path, fmt)
    back, bad = parse_checkins(path, fmt)
    assert bad == [] and back == checkins


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["good", "badlat", "badts", "short", "blank", "dup"]), max_size=20))
def test_rejection_accounting(tmp_path_factory, kinds):
    lines = ["checkin_id,user_id,venue_id,timestamp,lat,lon"]
    for i, kind in enumerate(kinds):
        cid = "dup" if kind == "dup" else f"c{i}"
        lat = "95" if kind == "badlat" else "1"
        ts = "nope" if kind == "badts" else "2014-05-05T10:00:00+00:00"
        line = {"short": f"{cid},u", "blank": ""}.get(kind, f"{cid},u,v,{ts},{lat},2")
        lines.append(line)
    path = tmp_path_factory.mktemp("acc") / "c.csv"
    path.write_text("\n".join(lines) + "\n")
    ok, bad = parse_checkins(path)
    assert len(ok) + len(bad) == len(kinds)


day_rows = st.lists(
    st.tuples(
        st.sampled_from(["u1", "u2", "u3"]),
        st.sampled_from(["a", "b", "c", "d"]),
        st.integers(0, 60 * 24 * 3),
        st.sampled_from(["A", "B"]),
    ),
    max_size=40,
)


def rows_to_frame(rows):
    base = datetime(2014, 5, 1, tzinfo=timezone(timedelta(hours=-3)))
    vs = [venue(f"{city}{v}", city, cat=CATEGORIES[ord(v) % 17]) for v in "abcd" for city in "AB"]
    data = [(u, f"{city}{v}", format_timestamp(base + timedelta(minutes=m)), city) for u, v, m, city in rows]
    return make_frame(data, vs)


@settings(max_examples=60, deadline=None)
@given(day_rows, st.randoms(use_true_random=False))
def test_classification_partition_and_order(rows, rnd):
    frame = rows_to_frame(rows)
    a = HomeCityClassifier(threshold_days=1).fit(frame)
    perm = list(range(len(frame)))
    rnd.shuffle(perm)
    b = HomeCityClassifier(threshold_days=1).fit(frame.iloc[perm])
    assert a.home_cities() == b.home_cities()
    labels = a.predict(frame)
    assert len(labels) == len(frame) and set(labels) <= {TOURIST, RESIDENT, EXCLUDED}


@settings(max_examples=60, deadline=None)
@given(day_rows)
def test_behavior_accounting(rows):
    frame = rows_to_frame(rows)
    dist = interval_distribution(frame)
    expected = sum(max(0, k - 1) for k in frame.groupby("user_id").size()) - dist.dropped
    assert dist.samples.size == expected and np.all(dist.samples > 0)
    wd = hourly_routine(frame, daytype=WEEKDAY).counts.sum()
    we = hourly_routine(frame, daytype=WEEKEND).counts.sum()
    assert wd + we == len(frame)
    pop = category_popularity(frame)
    assert pop.total == len(frame)
    if pop.total:
        assert abs(sum(pop.fractions().values()) - 1) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(day_rows)
def test_graph_weight_conservation(rows):
    frame = rows_to_frame(rows)
    g = build_graph(frame)
    # independent count of same-day consecutive pairs
    pairs = 0
    for _, grp in frame.sort_values(["user_id", "epoch", "checkin_id"]).groupby("user_id"):
        days = [d - (h < 5) for d, h in zip(grp["local_date"], grp["local_hour"])]
        pairs += sum(1 for x, y in zip(days, days[1:]) if x == y)
    assert g.total_weight == pairs
    touched = {n for e in g.weights for n in e}
    assert set(g.nodes) == touched
    for scores, hi in ((degree_centrality(g), 1.0), (closeness_centrality(g), 1.0)):
        assert all(0.0 <= s <= hi for s in scores.values())
    assert all(s >= 0 for s in betweenness_centrality(g).values())


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.tuples(st.floats(40, 41), st.floats(-74, -73)), min_size=5, max_size=30),
    st.randoms(use_true_random=False),
)
def test_radius_permutation_invariant(points, rnd):
    lats, lons = zip(*points)
    base = radius_of_gyration(lats, lons)
    rnd.shuffle(points)
    lats2, lons2 = zip(*points)
    assert abs(radius_of_gyration(lats2, lons2) - base) <= 1e-9 * max(base, 1.0)
