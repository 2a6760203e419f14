"""Venue x hour mobility graphs and their degree, closeness and betweenness centrality."""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

import networkx as nx
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .validation import check_checkin_frame, select_slice

logger = logging.getLogger(__name__)

METRICS = ("degree", "closeness", "betweenness")
DISTANCES = ("hops", "inverse_weight")


@dataclass(frozen=True)
class STNode:
    """A venue at a local clock hour. Identity is (venue_id, hour)."""

    venue_id: str
    hour: int
    name: str = field(default="", compare=False)
    subcategory: str = field(default="", compare=False)

    @property
    def label(self) -> str:
        return f"{self.name or self.venue_id}[{self.hour}]"


@dataclass
class MobilityGraph:
    city: str | None
    label: str | None
    weights: dict[tuple[STNode, STNode], int]

    @property
    def nodes(self) -> list[STNode]:
        seen = {}
        for u, v in self.weights:
            seen.setdefault(u, None)
            seen.setdefault(v, None)
        return sorted(seen, key=lambda n: (n.venue_id, n.hour))

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def __len__(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> dict[STNode, dict[STNode, int]]:
        adj: dict[STNode, dict[STNode, int]] = {n: {} for n in self.nodes}
        for (u, v), w in self.weights.items():
            adj[u][v] = w
        return adj

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph(city=self.city or "", label=self.label or "")
        for n in self.nodes:
            g.add_node(
                f"{n.venue_id}@{n.hour}",
                venue_id=n.venue_id,
                hour=n.hour,
                label=n.label,
                subcategory=n.subcategory,
            )
        for (u, v), w in sorted(self.weights.items(), key=lambda kv: _edge_key(kv[0])):
            g.add_edge(f"{u.venue_id}@{u.hour}", f"{v.venue_id}@{v.hour}", weight=w)
        return g


def _edge_key(edge):
    u, v = edge
    return (u.venue_id, u.hour, v.venue_id, v.hour)


def anchored_day(local_date: int, local_hour: int, anchor_hour: int = 5) -> int:
    """Ordinal of the anchor-hour-based day a local clock time belongs to."""
    return local_date - 1 if local_hour < anchor_hour else local_date


def build_graph(checkins: pd.DataFrame, city=None, label=None, day_anchor_hour: int = 5) -> MobilityGraph:
    """Fold each user's consecutive same-day check-ins into weighted (venue, hour) edges.

    A pair only counts when both check-ins fall in the same day window
    starting at ``day_anchor_hour`` local time. Only nodes touched by an edge
    end up in the graph.
    """
    if not 0 <= day_anchor_hour <= 23:
        raise ValueError(f"day_anchor_hour must be in [0, 23], got {day_anchor_hour}")
    check_checkin_frame(
        checkins, ["user_id", "venue_id", "epoch", "local_date", "local_hour", "city", "venue_name", "subcategory"]
    )
    frame = select_slice(checkins, city, label)
    sort_cols = ["user_id", "epoch", "checkin_id"] if "checkin_id" in frame.columns else ["user_id", "epoch"]
    frame = frame.sort_values(sort_cols, kind="mergesort")
    weights: dict[tuple[STNode, STNode], int] = {}
    prev_user = None
    prev_node = None
    prev_day = None
    for user, venue, date, hour, name, subcat in zip(
        frame["user_id"],
        frame["venue_id"],
        frame["local_date"],
        frame["local_hour"],
        frame["venue_name"],
        frame["subcategory"],
    ):
        node = STNode(str(venue), int(hour), str(name), str(subcat))
        day = anchored_day(int(date), int(hour), day_anchor_hour)
        if user == prev_user and day == prev_day:
            key = (prev_node, node)
            weights[key] = weights.get(key, 0) + 1
        prev_user, prev_node, prev_day = user, node, day
    return MobilityGraph(city=city, label=label, weights=weights)


# --- centrality -------------------------------------------------------------


def _as_adjacency(graph) -> dict[Hashable, dict[Hashable, float]]:
    if isinstance(graph, MobilityGraph):
        return graph.adjacency()
    if isinstance(graph, nx.DiGraph):
        return {u: {v: d.get("weight", 1) for v, d in graph[u].items()} for u in graph.nodes}
    if isinstance(graph, Mapping):
        adj: dict = {}
        for u, succ in graph.items():
            adj.setdefault(u, {})
            items = succ.items() if isinstance(succ, Mapping) else ((v, 1) for v in succ)
            for v, w in items:
                adj[u][v] = w
                adj.setdefault(v, {})
        return adj
    raise TypeError(f"unsupported graph type {type(graph).__name__}")


def degree_centrality(graph) -> dict:
    """Distinct incident edges (in plus out, a self-loop counted once) over the maximum."""
    adj = _as_adjacency(graph)
    deg = {v: 0 for v in adj}
    for u, succ in adj.items():
        for v in succ:
            deg[u] += 1
            if v != u:
                deg[v] += 1
    top = max(deg.values(), default=0)
    if top == 0:
        return {v: 0.0 for v in deg}
    return {v: d / top for v, d in deg.items()}


def _single_source(adj, source, distance: str):
    """Shortest-path DAG from ``source``: visit order, distances, path counts, predecessors."""
    dist = {source: 0}
    sigma = {source: 1}
    preds: dict = {source: []}
    order = []
    if distance == "hops":
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            dv = dist[v]
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dv + 1
                    sigma[w] = 0
                    preds[w] = []
                    queue.append(w)
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        return order, dist, sigma, preds
    # exact rational lengths 1/weight keep ties exact
    dist = {}
    sigma = {source: 1}
    preds = {source: []}
    seen = {source: Fraction(0)}
    counter = 0
    heap = [(Fraction(0), counter, source, source)]
    while heap:
        d, _, via, v = heapq.heappop(heap)
        if v in dist:
            continue
        if v != source:
            sigma[v] += sigma[via]
        dist[v] = d
        order.append(v)
        for w, weight in adj[v].items():
            nd = d + Fraction(1) / Fraction(weight)
            if w not in dist and (w not in seen or nd < seen[w]):
                seen[w] = nd
                counter += 1
                heapq.heappush(heap, (nd, counter, v, w))
                sigma[w] = 0
                preds[w] = [v]
            elif w not in dist and nd == seen[w]:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return order, dist, sigma, preds


def closeness_centrality(graph, distance: str = "hops") -> dict:
    """Outgoing closeness scaled by the reachable fraction: (R/(n-1)) * (R/sum d)."""
    _check_distance(distance)
    adj = _as_adjacency(graph)
    n = len(adj)
    scores = {}
    for v in adj:
        _, dist, _, _ = _single_source(adj, v, distance)
        reach = len(dist) - 1
        total = sum(dist.values())
        if reach == 0 or n < 2 or total == 0:
            scores[v] = 0.0
        else:
            scores[v] = float(Fraction(reach, n - 1) * (Fraction(reach) / Fraction(total)))
    return scores


def betweenness_centrality(graph, distance: str = "hops", normalized: bool = False, exact: bool = False) -> dict:
    """Brandes accumulation of shortest-path dependencies over ordered pairs.

    ``normalized`` divides by (n-1)(n-2). ``exact`` accumulates with
    fractions and returns ``Fraction`` scores, which is slower but free of
    rounding.
    """
    _check_distance(distance)
    adj = _as_adjacency(graph)
    zero = Fraction(0) if exact else 0.0
    score = {v: zero for v in adj}
    for s in adj:
        order, _, sigma, preds = _single_source(adj, s, distance)
        delta = {v: zero for v in order}
        for w in reversed(order):
            coeff = (Fraction(1) + delta[w]) / sigma[w] if exact else (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                score[w] += delta[w]
    n = len(adj)
    scale = (n - 1) * (n - 2) if normalized else 1
    if exact:
        return {v: (x / scale if scale > 0 else Fraction(0)) for v, x in score.items()}
    return {v: (float(x) / scale if scale > 0 else 0.0) for v, x in score.items()}


def _check_distance(distance):
    if distance not in DISTANCES:
        raise ValueError(f"distance must be one of {DISTANCES}, got {distance!r}")


def compute_centrality(graph, metric: str, distance: str = "hops", normalized: bool = False) -> dict:
    if metric == "degree":
        return degree_centrality(graph)
    if metric == "closeness":
        return closeness_centrality(graph, distance)
    if metric == "betweenness":
        return betweenness_centrality(graph, distance, normalized=normalized)
    raise ValueError(f"unknown centrality metric {metric!r}; expected one of {METRICS}")


def centrality_ranking(scores: Mapping[STNode, float], n: int | None = None) -> list[tuple[str, str, float]]:
    """Top-``n`` (label, subcategory, score) rows, best first, ties by label."""
    if n is not None and n < 1:
        raise ValueError("n must be >= 1")
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0].label, kv[0].venue_id, kv[0].hour))
    if n is not None:
        ordered = ordered[:n]
    return [(node.label, node.subcategory, score) for node, score in ordered]


class SpatioTemporalGraph(BaseEstimator):
    """Estimator wrapper: ``fit`` builds the graph for one (city, label) slice.

    Parameters
    ----------
    city, label : str or None
        Slice of the labelled check-in table to use; ``None`` keeps all rows.
    day_anchor_hour : int, default=5
        Local hour at which a new day window starts.
    distance : {"hops", "inverse_weight"}, default="hops"
        Path length used by closeness and betweenness.
    """

    def __init__(self, city=None, label=None, day_anchor_hour: int = 5, distance: str = "hops"):
        self.city = city
        self.label = label
        self.day_anchor_hour = day_anchor_hour
        self.distance = distance

    def fit(self, X, y=None):
        _check_distance(self.distance)
        self.graph_ = build_graph(X, self.city, self.label, self.day_anchor_hour)
        self.scores_ = {}
        return self

    def centrality(self, metric: str) -> dict:
        check_is_fitted(self, "graph_")
        if metric not in self.scores_:
            self.scores_[metric] = compute_centrality(self.graph_, metric, self.distance)
        return self.scores_[metric]

    def ranking(self, metric: str, n: int | None = 10):
        return centrality_ranking(self.centrality(metric), n)


def edge_list_frame(graph: MobilityGraph) -> pd.DataFrame:
    rows = [
        (u.venue_id, u.hour, v.venue_id, v.hour, w)
        for (u, v), w in sorted(graph.weights.items(), key=lambda kv: _edge_key(kv[0]))
    ]
    return pd.DataFrame(rows, columns=["from_venue", "from_hour", "to_venue", "to_hour", "weight"])


def write_graphml(graph: MobilityGraph, path) -> None:
    nx.write_graphml(graph.to_networkx(), path)
