import filecmp

import pandas as pd
import pytest

from tourmob.classify import HomeCityClassifier, compute_stay_spans
from tourmob.exceptions import ConfigError
from tourmob.ingest import CategoryMap, checkins_frame, load_venues, parse_checkins
from tourmob.mobility import MobilityMetrics
from tourmob.synth import ScenarioConfig, default_scenario, generate, write_scenario

from _oracles import great_circle_km


def load(paths):
    checkins, bad = parse_checkins(paths["checkins"])
    venues, vbad = load_venues(paths["venues"], CategoryMap.load())
    assert bad == [] and vbad == []
    return checkins_frame(checkins, venues)


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    scenario = generate(default_scenario(seed=5, residents=8, tourists=6, venues=80))
    paths = write_scenario(scenario, out)
    return scenario, paths, load(paths)


def test_zero_users(tmp_path):
    paths = write_scenario(generate(default_scenario(residents=0, tourists=0)), tmp_path)
    assert paths["checkins"].read_text() == "checkin_id,user_id,venue_id,timestamp,lat,lon\n"
    assert pd.read_csv(paths["ground_truth"]).empty
    assert parse_checkins(paths["checkins"]) == ([], [])


def test_deterministic(tmp_path):
    cfg = default_scenario(seed=9, residents=3, tourists=2, venues=40)
    a = write_scenario(generate(cfg), tmp_path / "a")
    b = write_scenario(generate(cfg), tmp_path / "b")
    for key in a:
        assert filecmp.cmp(a[key], b[key], shallow=False)
    c = write_scenario(generate(default_scenario(seed=10, residents=3, tourists=2, venues=40)), tmp_path / "c")
    assert not filecmp.cmp(a["checkins"], c["checkins"], shallow=False)


def test_labels_consistent_with_spans(small):
    scenario, _, frame = small
    truth = scenario.ground_truth.set_index("user_id")
    for s in compute_stay_spans(frame):
        row = truth.loc[s.user_id]
        if s.city == row["home_city"]:
            assert s.days >= 21
        else:
            assert s.days < 21
    clf = HomeCityClassifier().fit(frame)
    assert clf.home_cities() == dict(zip(truth.index, truth["home_city"]))


def test_tourists_concentrated(small):
    scenario, _, frame = small
    labeled = HomeCityClassifier().fit_transform(frame)
    tourists = labeled[labeled["label"] == "Tourist"]
    table = MobilityMetrics().fit_transform(tourists).set_index("user_id")
    truth = scenario.ground_truth.set_index("user_id")
    for user, g in tourists.groupby("user_id"):
        row = truth.loc[user]
        for lat, lon in zip(g["venue_lat"], g["venue_lon"]):
            assert great_circle_km(lat, lon, row["center_lat"], row["center_lon"]) <= row["radius_km"] + 1e-6
        rg = table.loc[user, "radius_gyration_km"]
        if rg == rg:
            assert rg <= row["radius_km"]


def test_ground_truth_columns(small):
    scenario, _, _ = small
    gt = scenario.ground_truth
    assert {"user_id", "class", "home_city", "planted_topic"} <= set(gt.columns)
    assert set(gt["class"]) == {"Resident", "Tourist"}
    assert set(gt["planted_topic"]) <= {"commuter", "food", "leisure"}


@pytest.mark.parametrize(
    "patch,match",
    [
        ({"tourists": {"visit_days": [3, 21]}}, "below the 21-day"),
        ({"residents": {"span_days": [10, 30]}}, "below the 21-day"),
        ({"residents": {"checkins_per_day": 0}}, "rates"),
        ({"residents": {"users_per_city": -1}}, ">= 0"),
        ({"cities": [{"name": "x", "bbox": [10, 0, 5, 1]}]}, "bounding box"),
        ({"cities": [{"name": "x", "bbox": [1, 2, 3]}]}, "bbox"),
        ({"topics": [{"name": "t", "subcategories": {"Nope": 1}}]}, "unknown subcategories"),
    ],
)
def test_config_errors(patch, match):
    base = default_scenario().to_dict()
    for key, value in patch.items():
        if isinstance(value, dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    with pytest.raises(ConfigError, match=match):
        ScenarioConfig.from_dict(base)


def test_yaml_round_trip(tmp_path):
    import yaml

    cfg = default_scenario(seed=2, residents=1, tourists=1)
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(cfg.to_dict()))
    assert ScenarioConfig.load(p) == cfg
