"""Structural parameters the revenue bounds depend on.

Maximum degree, arboricity (exact by ceiling-density over induced vertex
subsets at desk scale, interval bounds otherwise), a greedy forest
partition with a checkable witness, and Berge acyclicity for hypergraphs
(forest incidence graph).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .market import KindError, MarketInstance, SizeError


def max_degree(instance: MarketInstance) -> int:
    """Largest number of demands incident to one seller; parallel demands count."""
    if not instance.nodes:
        return 0
    return max(len(instance.incident(v)) for v in instance.nodes)


def e_max(instance: MarketInstance) -> int:
    """Size of the largest demand (2 for graphs); 0 with no demands."""
    if not instance.demands:
        return 0
    return max(d.size for d in instance.demands)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _density_over_masks(member_masks, weights, masks):
    """max over given vertex masks of ceil(sum weights of contained demands / (|S|-1))."""
    best = 0
    for mask in masks:
        k = mask.bit_count()
        if k < 2:
            continue
        inside = 0
        for dm, w in zip(member_masks, weights):
            if dm & mask == dm:
                inside += w
        if inside:
            best = max(best, _ceil_div(inside, k - 1))
    return best


def _demand_masks(instance):
    idx = instance.node_index
    masks = []
    for d in instance.demands:
        m = 0
        for v in d.members:
            m |= 1 << idx[v]
        masks.append(m)
    return masks


def arboricity_exact(instance: MarketInstance, node_limit: int = 16) -> int:
    """Minimum number of forests partitioning the edges, for small graphs.

    Equals the maximum over induced subgraphs H (>= 2 nodes) of
    ceil(|E_H| / (|V_H| - 1)); the maximum of that density is attained on
    induced subgraphs, so exhaustive vertex-subset enumeration is exact.
    """
    if not instance.is_graph:
        raise KindError("exact arboricity is defined here for graphs only; use forest_partition_bounds")
    n = len(instance.nodes)
    if n > node_limit:
        raise SizeError(f"{n} nodes exceeds node_limit={node_limit}; use forest_partition_bounds")
    if not instance.demands:
        return 0
    member_masks = _demand_masks(instance)
    weights = [1] * len(member_masks)
    return _density_over_masks(member_masks, weights, range(3, 1 << n))


class _DisjointSet:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _forest_can_take(ds: _DisjointSet, members) -> bool:
    # A demand extends a Berge-forest unless two of its members are already
    # connected inside the forest (that closes a cycle in the incidence graph).
    roots = set()
    for m in members:
        r = ds.find(m)
        if r in roots:
            return False
        roots.add(r)
    return True


def _forest_add(ds: _DisjointSet, members):
    first = members[0]
    for m in members[1:]:
        ds.union(m, first)


@dataclass(frozen=True)
class ForestBounds:
    lower: int
    upper: int
    witness: tuple  # tuple of forests, each a tuple of demand ids


def forest_partition_bounds(instance: MarketInstance, samples: int = 2048, seed: int = 0) -> ForestBounds:
    """Bracket the arboricity: greedy partition above, ceiling density below.

    The witness is the greedy partition itself (each part Berge-acyclic,
    parts covering the demand list exactly); the lower bound scans all
    vertex subsets when there are at most 16 nodes and samples otherwise.
    """
    forests = []
    assignments = []
    for d in instance.demands:
        for part, ds in forests:
            if _forest_can_take(ds, d.members):
                _forest_add(ds, d.members)
                part.append(d.id)
                break
        else:
            ds = _DisjointSet()
            _forest_add(ds, d.members)
            forests.append(([d.id], ds))
    upper = len(forests)
    witness = tuple(tuple(part) for part, _ in forests)

    member_masks = _demand_masks(instance)
    weights = [d.size - 1 for d in instance.demands]
    n = len(instance.nodes)
    if n <= 16:
        masks = range(3, 1 << n)
    else:
        rng = random.Random(seed)
        seen = {(1 << n) - 1}
        seen.update(member_masks)
        for _ in range(samples):
            k = rng.randint(2, n)
            picks = rng.sample(range(n), k)
            m = 0
            for i in picks:
                m |= 1 << i
            seen.add(m)
        masks = seen
    lower = _density_over_masks(member_masks, weights, masks)
    if instance.demands:
        lower = max(lower, 1)
    return ForestBounds(lower=lower, upper=upper, witness=witness)


def verify_forest_partition(instance: MarketInstance, witness) -> bool:
    """Check a partition witness: parts acyclic, covering the demands exactly."""
    seen = []
    for part in witness:
        ds = _DisjointSet()
        for did in part:
            d = instance.demand_map.get(did)
            if d is None:
                return False
            if not _forest_can_take(ds, d.members):
                return False
            _forest_add(ds, d.members)
            seen.append(did)
    return sorted(seen) == sorted(d.id for d in instance.demands)


def berge_acyclic(instance: MarketInstance) -> bool:
    """True iff the bipartite node/demand incidence graph is a forest."""
    ds = _DisjointSet()
    for d in instance.demands:
        if not _forest_can_take(ds, d.members):
            return False
        _forest_add(ds, d.members)
    return True


@dataclass(frozen=True)
class MetricsReport:
    max_degree: int
    arboricity: Optional[int]  # exact value when computable
    arboricity_bounds: tuple  # (lower, upper), always valid
    e_max: int
    berge_acyclic: bool

    def to_json(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "arboricity": self.arboricity if self.arboricity is not None else list(self.arboricity_bounds),
            "arboricity_bounds": list(self.arboricity_bounds),
            "e_max": self.e_max,
            "berge_acyclic": self.berge_acyclic,
        }


def metrics_report(instance: MarketInstance, node_limit: int = 16) -> MetricsReport:
    bounds = forest_partition_bounds(instance)
    exact = None
    if instance.is_graph and len(instance.nodes) <= node_limit:
        exact = arboricity_exact(instance, node_limit=node_limit)
    return MetricsReport(
        max_degree=max_degree(instance),
        arboricity=exact,
        arboricity_bounds=(bounds.lower, bounds.upper),
        e_max=e_max(instance),
        berge_acyclic=berge_acyclic(instance),
    )
