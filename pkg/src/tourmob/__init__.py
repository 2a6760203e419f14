"""Tourist and resident mobility analytics over location-based check-in data."""

__version__ = "0.1.0"

from .behavior import behavior_tables, category_popularity, hourly_routine, interval_distribution, venue_ranking
from .classify import EXCLUDED, RESIDENT, TOURIST, HomeCityClassifier, classify_user, compute_stay_spans
from .exceptions import ConfigError, DataError, MissingStageOutput, TourmobError
from .ingest import CATEGORIES, CategoryMap, CheckIn, Venue, checkins_frame, load_venues, parse_checkins
from .mobility import MobilityMetrics, haversine_km, mean_displacement, radius_of_gyration
from .pipeline import PipelineConfig, run_pipeline, run_stage
from .profiles import CheckinLDA, TopicModel, UserDocument, build_corpus, fit_lda, fold_in, top_subcategories
from .stgraph import (
    MobilityGraph,
    SpatioTemporalGraph,
    STNode,
    betweenness_centrality,
    build_graph,
    closeness_centrality,
    degree_centrality,
)
from .synth import ScenarioConfig, default_scenario, generate, write_scenario

__all__ = [
    "CATEGORIES",
    "EXCLUDED",
    "RESIDENT",
    "TOURIST",
    "CategoryMap",
    "CheckIn",
    "CheckinLDA",
    "ConfigError",
    "DataError",
    "HomeCityClassifier",
    "MissingStageOutput",
    "MobilityGraph",
    "MobilityMetrics",
    "PipelineConfig",
    "STNode",
    "ScenarioConfig",
    "SpatioTemporalGraph",
    "TopicModel",
    "TourmobError",
    "UserDocument",
    "Venue",
    "behavior_tables",
    "betweenness_centrality",
    "build_corpus",
    "build_graph",
    "category_popularity",
    "checkins_frame",
    "classify_user",
    "closeness_centrality",
    "compute_stay_spans",
    "default_scenario",
    "degree_centrality",
    "fit_lda",
    "fold_in",
    "generate",
    "haversine_km",
    "hourly_routine",
    "interval_distribution",
    "load_venues",
    "mean_displacement",
    "parse_checkins",
    "radius_of_gyration",
    "run_pipeline",
    "run_stage",
    "top_subcategories",
    "venue_ranking",
    "write_scenario",
]
