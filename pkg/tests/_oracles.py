"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import math
from fractions import Fraction


def great_circle_km(lat1, lon1, lat2, lon2, radius=6371.0):
    """atan2 form of the central angle; no shared code with the library."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    y = math.hypot(math.cos(p2) * math.sin(dl), math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dl))
    x = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return radius * math.atan2(y, x)


def mean_displacement_ref(points):
    """Cumulative consecutive distance over the number of check-ins."""
    total = 0.0
    for (a, b), (c, d) in zip(points, points[1:]):
        total += great_circle_km(a, b, c, d)
    return total / len(points)


def radius_of_gyration_ref(points, venues, min_checkins=5):
    n = len(points)
    if n < min_checkins:
        return None
    cm_lat = sum(p[0] for p in points) / n
    cm_lon = sum(p[1] for p in points) / n
    per_venue = {}
    for v, p in zip(venues, points):
        per_venue.setdefault(v, [p, 0])[1] += 1
    acc = 0.0
    for (lat, lon), count in per_venue.values():
        acc += count * great_circle_km(lat, lon, cm_lat, cm_lon) ** 2
    return math.sqrt(acc / n)


def all_simple_paths(adj, s, t):
    stack = [(s, [s])]
    while stack:
        v, path = stack.pop()
        for w in adj[v]:
            if w == t:
                yield path + [w]
            elif w not in path:
                stack.append((w, path + [w]))


def path_length(adj, path, weighted):
    if not weighted:
        return Fraction(len(path) - 1)
    return sum((Fraction(1, adj[u][v]) for u, v in zip(path, path[1:])), Fraction(0))


def shortest_paths(adj, s, t, weighted=False):
    paths = list(all_simple_paths(adj, s, t))
    if not paths:
        return None, []
    lengths = [path_length(adj, p, weighted) for p in paths]
    best = min(lengths)
    return best, [p for p, L in zip(paths, lengths) if L == best]


def brute_degree(adj):
    edges = {(u, v) for u in adj for v in adj[u]}
    deg = {v: sum(1 for e in edges if v in e) for v in adj}
    top = max(deg.values(), default=0)
    return {v: (Fraction(d, top) if top else Fraction(0)) for v, d in deg.items()}


def brute_closeness(adj, weighted=False):
    n = len(adj)
    out = {}
    for v in adj:
        dists = [shortest_paths(adj, v, t, weighted)[0] for t in adj if t != v]
        dists = [d for d in dists if d is not None]
        r = len(dists)
        out[v] = Fraction(0) if r == 0 else Fraction(r, n - 1) * (Fraction(r) / sum(dists))
    return out


def brute_betweenness(adj, weighted=False):
    score = {v: Fraction(0) for v in adj}
    for s in adj:
        for t in adj:
            if s == t:
                continue
            _, paths = shortest_paths(adj, s, t, weighted)
            if not paths:
                continue
            for v in adj:
                if v in (s, t):
                    continue
                through = sum(1 for p in paths if v in p[1:-1])
                score[v] += Fraction(through, len(paths))
    return score


def random_digraph(rng, max_nodes=8, weighted=False):
    n = int(rng.integers(1, max_nodes + 1))
    p = float(rng.uniform(0.1, 0.6))
    adj = {i: {} for i in range(n)}
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                adj[u][v] = int(rng.integers(1, 4)) if weighted else 1
    return adj
