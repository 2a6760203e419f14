"""File-based pipeline: ingest -> classify -> behavior / mobility / graph / profiles.

Every stage reads the previous stage's files from the output directory and
writes plain CSV/JSON/GraphML, so stages can run in separate processes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass, fields
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .behavior import behavior_tables
from .classify import RESIDENT, TOURIST, HomeCityClassifier
from .exceptions import ConfigError, DataError, MissingStageOutput, TourmobError
from .ingest import (
    CategoryMap,
    checkins_frame,
    load_venues,
    parse_checkins,
    parse_timestamp,
    write_checkins,
    write_venues,
)
from .mobility import MobilityMetrics, empirical_cdf
from .profiles import build_corpus, fit_lda, top_subcategories
from .stgraph import (
    DISTANCES,
    METRICS,
    build_graph,
    centrality_ranking,
    compute_centrality,
    edge_list_frame,
    write_graphml,
)

logger = logging.getLogger(__name__)

STAGES = ("ingest-check", "classify", "behavior", "mobility", "graph", "profiles")
CLASSES = (RESIDENT, TOURIST)

CLEAN_CHECKINS = "checkins_clean.csv"
CLEAN_VENUES = "venues_clean.csv"
LABELED = "checkins_labeled.csv"
MANIFEST = "manifest.json"

LABELED_COLUMNS = [
    "checkin_id",
    "user_id",
    "venue_id",
    "timestamp",
    "lat",
    "lon",
    "city",
    "venue_name",
    "venue_lat",
    "venue_lon",
    "category",
    "subcategory",
    "home_city",
    "label",
]


@dataclass
class PipelineConfig:
    checkins: Path | None = None
    venues: Path | None = None
    checkins_format: str = "csv"
    category_map: Path | None = None
    ground_truth: Path | None = None
    output_dir: Path = Path("tourmob-out")
    threshold_days: int = 21
    min_checkins_rg: int = 5
    day_anchor_hour: int = 5
    displacement_denominator: str = "checkins"
    graph_metrics: tuple[str, ...] = METRICS
    graph_distance: str = "hops"
    top_n: int = 10
    lda_topics: int = 3
    lda_alpha: float | None = None
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    lda_seed: int = 0
    lda_top_m: int = 4

    def validate(self) -> None:
        if self.checkins_format not in ("csv", "jsonl"):
            raise ConfigError(f"checkins_format must be csv or jsonl, got {self.checkins_format!r}")
        for name in ("threshold_days", "min_checkins_rg", "top_n", "lda_topics", "lda_iterations", "lda_top_m"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.day_anchor_hour, int) or not 0 <= self.day_anchor_hour <= 23:
            raise ConfigError(f"day_anchor_hour must be an integer in [0, 23], got {self.day_anchor_hour!r}")
        if self.displacement_denominator not in ("checkins", "transitions"):
            raise ConfigError("displacement_denominator must be 'checkins' or 'transitions'")
        bad = [m for m in self.graph_metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown graph metric(s) {bad}; choose from {METRICS}")
        if self.graph_distance not in DISTANCES:
            raise ConfigError(f"graph distance must be one of {DISTANCES}")
        if self.lda_alpha is not None and self.lda_alpha <= 0 or self.lda_beta <= 0:
            raise ConfigError("LDA priors must be positive")

    def parameters(self) -> dict:
        """Parameter values for the manifest (paths left out)."""
        skip = {"checkins", "venues", "category_map", "ground_truth", "output_dir"}
        out = {}
        for f in fields(self):
            if f.name not in skip:
                value = getattr(self, f.name)
                out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "PipelineConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("pipeline config must be a mapping")
        flat = dict(data)
        nested = {
            "graph": {"metrics": "graph_metrics", "distance": "graph_distance", "top_n": "top_n"},
            "behavior": {"top_n": "top_n"},
            "lda": {
                "n_topics": "lda_topics",
                "alpha": "lda_alpha",
                "beta": "lda_beta",
                "iterations": "lda_iterations",
                "seed": "lda_seed",
                "top_m": "lda_top_m",
            },
        }
        for section, mapping in nested.items():
            block = flat.pop(section, None) or {}
            if not isinstance(block, dict):
                raise ConfigError(f"'{section}' must be a mapping")
            for key, value in block.items():
                if key not in mapping:
                    raise ConfigError(f"unknown key '{section}.{key}'")
                flat[mapping[key]] = value
        known = {f.name for f in fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        for key in ("checkins", "venues", "category_map", "ground_truth", "output_dir"):
            if flat.get(key) is not None:
                p = Path(flat[key])
                if base_dir is not None and not p.is_absolute():
                    p = base_dir / p
                flat[key] = p
        if "graph_metrics" in flat:
            flat["graph_metrics"] = tuple(flat["graph_metrics"])
        cfg = cls(**flat)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)


# --- helpers -----------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_csv(frame: pd.DataFrame, path: Path) -> int:
    frame.to_csv(path, index=False, lineterminator="\n")
    return len(frame)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_") or "x"


def _require(config: PipelineConfig, stage: str, name: str, producer: str) -> Path:
    path = Path(config.output_dir) / name
    if not path.exists():
        raise MissingStageOutput(stage, producer, path)
    return path


def read_labeled(path) -> pd.DataFrame:
    """Load ``checkins_labeled.csv`` and rebuild the derived clock columns."""
    frame = pd.read_csv(path, dtype={"checkin_id": str, "user_id": str, "venue_id": str, "city": str,
                                     "venue_name": str, "category": str, "subcategory": str,
                                     "home_city": str, "label": str}, keep_default_na=False)
    missing = [c for c in LABELED_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path} lacks column(s) {missing}")
    stamps = [parse_timestamp(t) for t in frame["timestamp"]]
    frame["epoch"] = np.array([int(t.timestamp()) for t in stamps], dtype=np.int64)
    frame["local_date"] = np.array([t.toordinal() for t in stamps], dtype=np.int64)
    frame["local_hour"] = np.array([t.hour for t in stamps], dtype=np.int64)
    frame["weekday"] = np.array([t.weekday() for t in stamps], dtype=np.int64)
    for col in ("lat", "lon", "venue_lat", "venue_lon"):
        frame[col] = frame[col].astype(float)
    return frame


def _slices(frame: pd.DataFrame):
    part = frame[frame["label"].isin(CLASSES)]
    return sorted({(str(c), str(l)) for c, l in zip(part["city"], part["label"])})


# --- stages -------------------------------------------------------------------


def stage_ingest(config: PipelineConfig) -> dict:
    if config.checkins is None or config.venues is None:
        raise ConfigError("ingest-check needs both 'checkins' and 'venues' input paths")
    out = Path(config.output_dir)
    category_map = CategoryMap.load(config.category_map)
    try:
        checkins, rejected = parse_checkins(config.checkins, config.checkins_format)
        venues, rejected_venues = load_venues(config.venues, category_map)
    except OSError as exc:
        raise DataError(f"cannot read input: {exc}") from exc
    write_checkins(checkins, out / CLEAN_CHECKINS)
    write_venues(sorted(venues.values(), key=lambda v: v.venue_id), out / CLEAN_VENUES, remapped=True)
    rows = [("checkins", r.line, r.reason) for r in rejected] + [("venues", r.line, r.reason) for r in rejected_venues]
    _write_csv(pd.DataFrame(rows, columns=["source", "line", "reason"]), out / "rejected.csv")
    unresolved = sum(1 for c in checkins if c.venue_id not in venues)
    return {
        CLEAN_CHECKINS: len(checkins),
        CLEAN_VENUES: len(venues),
        "rejected.csv": len(rows),
        "unresolved_venue_checkins": unresolved,
    }


def stage_classify(config: PipelineConfig) -> dict:
    src = _require(config, "classify", CLEAN_CHECKINS, "ingest-check")
    venues_path = _require(config, "classify", CLEAN_VENUES, "ingest-check")
    out = Path(config.output_dir)
    checkins, rejected = parse_checkins(src, "csv")
    if rejected:
        raise DataError(f"{src} has {len(rejected)} malformed record(s); re-run ingest-check")
    venues, _ = load_venues(venues_path, CategoryMap.load(config.category_map))
    frame = checkins_frame(checkins, venues)
    clf = HomeCityClassifier(threshold_days=config.threshold_days).fit(frame)
    labeled = clf.transform(frame)
    labeled["home_city"] = labeled["home_city"].fillna("")
    _write_csv(labeled[LABELED_COLUMNS], out / LABELED)
    users = clf.users_frame()
    users["home_city"] = users["home_city"].fillna("")
    _write_csv(users, out / "users.csv")
    summary = {
        "users": len(users),
        "users_with_home": int((users["home_city"] != "").sum()),
        LABELED: len(labeled),
    }
    if config.ground_truth is not None:
        summary["accuracy_vs_ground_truth"] = classification_accuracy(users, config.ground_truth)
    return summary


def classification_accuracy(users: pd.DataFrame, ground_truth_path) -> float | None:
    """Share of ground-truth users whose inferred home city matches the planted one."""
    truth = pd.read_csv(ground_truth_path, dtype=str, keep_default_na=False)
    if truth.empty:
        return None
    predicted = dict(zip(users["user_id"].astype(str), users["home_city"].astype(str)))
    hits = sum(predicted.get(u, "") == h for u, h in zip(truth["user_id"], truth["home_city"]))
    return hits / len(truth)


def stage_behavior(config: PipelineConfig) -> dict:
    frame = read_labeled(_require(config, "behavior", LABELED, "classify"))
    out = Path(config.output_dir)
    tables = behavior_tables(frame, CLASSES, config.top_n)
    return {f"{name}.csv": _write_csv(table, out / f"{name}.csv") for name, table in tables.items()}


def stage_mobility(config: PipelineConfig) -> dict:
    frame = read_labeled(_require(config, "mobility", LABELED, "classify"))
    out = Path(config.output_dir)
    part = frame[frame["label"].isin(CLASSES)]
    metrics = MobilityMetrics(config.min_checkins_rg, config.displacement_denominator).fit(part)
    table = metrics.transform(part)
    cdf_rows = []
    for (city, label), g in table.groupby(["city", "class"], sort=True):
        for metric in ("mean_displacement_km", "radius_gyration_km"):
            cdf = empirical_cdf(g[metric].to_numpy())
            cdf_rows.extend((city, label, metric, v, f) for v, f in zip(cdf["value"], cdf["fraction"]))
    cols = ["user_id", "city", "class", "n_checkins", "mean_displacement_km", "radius_gyration_km"]
    return {
        "mobility.csv": _write_csv(table[cols], out / "mobility.csv"),
        "mobility_cdf.csv": _write_csv(
            pd.DataFrame(cdf_rows, columns=["city", "class", "metric", "value", "fraction"]), out / "mobility_cdf.csv"
        ),
    }


def stage_graph(config: PipelineConfig) -> dict:
    frame = read_labeled(_require(config, "graph", LABELED, "classify"))
    out = Path(config.output_dir)
    graph_dir = out / "graphs"
    graph_dir.mkdir(exist_ok=True)
    edges, ranks = [], []
    for city, label in _slices(frame):
        graph = build_graph(frame, city, label, config.day_anchor_hour)
        e = edge_list_frame(graph)
        e.insert(0, "class", label)
        e.insert(0, "city", city)
        edges.append(e)
        write_graphml(graph, graph_dir / f"{_slug(city)}_{label.lower()}.graphml")
        if not graph.weights:
            continue
        for metric in config.graph_metrics:
            scores = compute_centrality(graph, metric, config.graph_distance)
            for rank, (node_label, subcat, score) in enumerate(centrality_ranking(scores, config.top_n), start=1):
                ranks.append((city, label, metric, rank, node_label, subcat, score))
    edge_cols = ["city", "class", "from_venue", "from_hour", "to_venue", "to_hour", "weight"]
    edge_table = pd.concat(edges, ignore_index=True) if edges else pd.DataFrame(columns=edge_cols)
    return {
        "graph_edges.csv": _write_csv(edge_table[edge_cols], out / "graph_edges.csv"),
        "centrality.csv": _write_csv(
            pd.DataFrame(ranks, columns=["city", "class", "metric", "rank", "label", "subcategory", "score"]),
            out / "centrality.csv",
        ),
    }


def stage_profiles(config: PipelineConfig) -> dict:
    frame = read_labeled(_require(config, "profiles", LABELED, "classify"))
    out = Path(config.output_dir)
    lda_dir = out / "lda"
    lda_dir.mkdir(exist_ok=True)
    rows = []
    for city, label in _slices(frame):
        docs, vocab = build_corpus(frame, city, label)
        if not vocab:
            continue
        model = fit_lda(
            docs,
            n_topics=config.lda_topics,
            alpha=config.lda_alpha,
            beta=config.lda_beta,
            iterations=config.lda_iterations,
            seed=config.lda_seed,
            vocabulary=vocab,
        )
        model.save(lda_dir / f"{_slug(city)}_{label.lower()}.json")
        report = top_subcategories(model, config.lda_top_m).to_frame()
        rows.extend((city, label, *r) for r in report.itertuples(index=False))
    cols = ["city", "class", "topic_index", "rank", "subcategory", "probability"]
    return {"profiles.csv": _write_csv(pd.DataFrame(rows, columns=cols), out / "profiles.csv")}


STAGE_FUNCS = {
    "ingest-check": stage_ingest,
    "classify": stage_classify,
    "behavior": stage_behavior,
    "mobility": stage_mobility,
    "graph": stage_graph,
    "profiles": stage_profiles,
}


class StageFailed(TourmobError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"stage '{stage}' failed: {cause}")


def run_stage(stage: str, config: PipelineConfig) -> dict:
    if stage not in STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; expected one of {STAGES}")
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    logger.info("running stage %s", stage)
    try:
        return STAGE_FUNCS[stage](config)
    except MissingStageOutput:
        raise
    except TourmobError as exc:
        raise StageFailed(stage, exc) from exc
    except OSError as exc:
        raise StageFailed(stage, DataError(str(exc))) from exc
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        raise StageFailed(stage, exc) from exc


def run_pipeline(config: PipelineConfig, stages=STAGES) -> dict:
    """Run ``stages`` in order and write ``manifest.json`` into the output directory."""
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, timing = {}, {}
    previous = out / MANIFEST
    if tuple(stages) != STAGES and previous.exists():
        # single-stage runs extend the record left by earlier stages
        try:
            prior = json.loads(previous.read_text(encoding="utf-8"))
            results.update(prior.get("stages", {}))
            timing.update(prior.get("timing", {}).get("seconds", {}))
        except (OSError, ValueError):
            logger.warning("ignoring unreadable %s", previous)
    for stage in stages:
        t0 = time.perf_counter()
        results[stage] = run_stage(stage, config)
        timing[stage] = round(time.perf_counter() - t0, 6)
    manifest = build_manifest(config, results, timing)
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def build_manifest(config: PipelineConfig, results: dict, timing: dict) -> dict:
    inputs = {}
    for key in ("checkins", "venues", "category_map", "ground_truth"):
        path = getattr(config, key)
        if path is not None and Path(path).exists():
            inputs[key] = {"file": Path(path).name, "sha256": _sha256(Path(path))}
    out = Path(config.output_dir)
    outputs = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != MANIFEST:
            rel = path.relative_to(out).as_posix()
            entry = {"sha256": _sha256(path)}
            if path.suffix == ".csv":
                with open(path, newline="", encoding="utf-8") as fh:
                    entry["rows"] = max(sum(1 for _ in csv.reader(fh)) - 1, 0)
            outputs[rel] = entry
    return {
        "tool": "tourmob",
        "version": __version__,
        "parameters": config.parameters(),
        "inputs": inputs,
        "stages": {stage: results[stage] for stage in STAGES if stage in results},
        "outputs": outputs,
        "timing": {"seconds": timing, "finished": datetime.now().astimezone().isoformat(timespec="seconds")},
    }
