import itertools

import numpy as np
import pytest

from tourmob.classify import (
    EXCLUDED,
    RESIDENT,
    TOURIST,
    HomeCityClassifier,
    StaySpan,
    classify_user,
    compute_stay_spans,
    label_checkin,
)

from _helpers import make_frame


def span(city, days, count=2, user="u"):
    return StaySpan(user, city, 0, days * 86400, days, count)


def test_may_5_to_may_30_is_25_days():
    frame = make_frame([("u", "a1", "2014-05-05T09:00:00+00:00"), ("u", "a2", "2014-05-30T08:00:00+00:00")])
    (s,) = compute_stay_spans(frame)
    assert (s.city, s.days, s.checkin_count) == ("A", 25, 2)


def test_calendar_days_use_local_clock():
    # 23:30 local on May 5 and 00:30 local on May 6 are one calendar day apart
    frame = make_frame([("u", "a", "2014-05-05T23:30:00-03:00"), ("u", "a", "2014-05-06T00:30:00-03:00")])
    assert compute_stay_spans(frame)[0].days == 1


def test_single_checkin_span():
    (s,) = compute_stay_spans(make_frame([("u", "a", "2014-05-05T09:00:00+00:00")]))
    assert (s.days, s.checkin_count) == (0, 1)


def test_two_cities():
    frame = make_frame(
        [
            ("u", "a", "2014-05-01T10:00:00+00:00", "A"),
            ("u", "b", "2014-05-02T10:00:00+00:00", "B"),
            ("u", "a", "2014-05-10T10:00:00+00:00", "A"),
            ("u", "b", "2014-06-09T10:00:00+00:00", "B"),
        ]
    )
    assert {s.city: s.days for s in compute_stay_spans(frame)} == {"A": 9, "B": 38}


def test_classify_rules():
    assert classify_user([span("A", 25)]).home_city == "A"
    assert classify_user([span("A", 5)]).home_city is None
    for perm in itertools.permutations([span("A", 25), span("B", 30), span("C", 3)]):
        assert classify_user(list(perm)).home_city == "B"


def test_threshold_sharpness():
    assert classify_user([span("A", 20)]).home_city is None
    assert classify_user([span("A", 21)]).home_city == "A"
    assert classify_user([span("A", 21)], threshold_days=22).home_city is None


def test_ties():
    assert classify_user([span("B", 30, 2), span("A", 30, 5)]).home_city == "A"
    assert classify_user([span("B", 30, 9), span("A", 30, 5)]).home_city == "B"
    assert classify_user([span("B", 30, 5), span("A", 30, 5)]).home_city == "A"


def test_label_checkin():
    assert label_checkin("NY", "NY") == RESIDENT
    assert label_checkin("NY", "Rio") == TOURIST
    assert label_checkin(None, "Rio") == EXCLUDED


def tourist_frame():
    return make_frame(
        [
            ("ny1", "ny_a", "2014-04-01T10:00:00-04:00", "NY"),
            ("ny1", "ny_b", "2014-05-01T10:00:00-04:00", "NY"),
            ("ny1", "rio_a", "2014-05-10T10:00:00-03:00", "Rio"),
            ("ny1", "rio_b", "2014-05-12T10:00:00-03:00", "Rio"),
            ("drift", "rio_a", "2014-05-10T10:00:00-03:00", "Rio"),
            ("drift", "ny_a", "2014-05-20T10:00:00-04:00", "NY"),
        ]
    )


def test_estimator_labels():
    frame = tourist_frame()
    clf = HomeCityClassifier().fit(frame)
    assert clf.home_cities() == {"drift": None, "ny1": "NY"}
    out = clf.transform(frame)
    got = dict(zip(zip(out["user_id"], out["venue_id"]), out["label"]))
    assert got[("ny1", "ny_a")] == RESIDENT
    assert got[("ny1", "rio_a")] == TOURIST
    assert got[("drift", "rio_a")] == EXCLUDED
    assert list(clf.predict(frame)) == list(out["label"])
    users = clf.users_frame()
    assert list(users.columns) == ["user_id", "home_city", "max_days"]
    assert dict(zip(users["user_id"], users["max_days"])) == {"drift": 0, "ny1": 30}


def test_estimator_params_and_unfitted():
    clf = HomeCityClassifier(threshold_days=10)
    assert clf.get_params() == {"threshold_days": 10}
    with pytest.raises(Exception):
        clf.predict(tourist_frame())
    with pytest.raises(ValueError):
        HomeCityClassifier(threshold_days=0).fit(tourist_frame())


def test_unseen_users_excluded():
    clf = HomeCityClassifier().fit(tourist_frame())
    other = make_frame([("new", "x", "2014-05-05T09:00:00+00:00")])
    assert list(clf.predict(other)) == [EXCLUDED]


def test_order_invariance():
    frame = tourist_frame()
    rng = np.random.default_rng(1)
    shuffled = frame.iloc[rng.permutation(len(frame))]
    a = HomeCityClassifier().fit(frame).home_cities()
    b = HomeCityClassifier().fit(shuffled).home_cities()
    assert a == b


def test_adding_home_checkin_keeps_resident():
    base = [
        ("u", "h1", "2014-04-01T10:00:00+00:00", "H"),
        ("u", "h2", "2014-04-25T10:00:00+00:00", "H"),
        ("u", "t1", "2014-05-01T10:00:00+00:00", "T"),
    ]
    extra = base + [("u", "h3", "2014-04-10T10:00:00+00:00", "H")]
    for rows in (base, extra):
        assert HomeCityClassifier().fit(make_frame(rows)).home_cities() == {"u": "H"}
