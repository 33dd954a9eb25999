"""Exact model of the network pricing game with complementary goods.

Sellers are nodes, each posting one nonnegative price to everyone.  A buyer
is a demand over one or more sellers (an edge when it has two members) with
a value; it buys exactly when the sum of the member prices does not exceed
that value.  All game arithmetic is exact: values and prices are
`fractions.Fraction`, and infinity is a first-class price (the starting
point of the sweep algorithms), never a large sentinel number.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Union


class MarketError(ValueError):
    """Base class for contract violations in this package."""


class CoverageError(MarketError):
    """A price profile does not cover exactly the instance's node set."""


class MembershipError(MarketError):
    """A seller was used with a demand it does not belong to."""


class KindError(MarketError):
    """Operation restricted to graph (or hypergraph) instances."""


class SizeError(MarketError):
    """Instance too large for an exhaustive operation."""


class PreconditionError(MarketError):
    """A checked precondition (e.g. 'profile is a non-malicious NE') failed."""


class BudgetExceededError(MarketError):
    """An enumeration exceeded its configured work budget."""


class _Extreme:
    """Signed infinity, comparable against Fraction.  Two singletons only."""

    __slots__ = ("_sign",)

    def __init__(self, sign):
        self._sign = sign

    def __lt__(self, other):
        if isinstance(other, _Extreme):
            return self._sign < other._sign
        return self._sign < 0

    def __le__(self, other):
        if isinstance(other, _Extreme):
            return self._sign <= other._sign
        return self._sign < 0

    def __gt__(self, other):
        if isinstance(other, _Extreme):
            return self._sign > other._sign
        return self._sign > 0

    def __ge__(self, other):
        if isinstance(other, _Extreme):
            return self._sign >= other._sign
        return self._sign > 0

    def __repr__(self):
        return "inf" if self._sign > 0 else "-inf"

    def __reduce__(self):
        return (_extreme_singleton, (self._sign,))


INF = _Extreme(1)
NEG_INF = _Extreme(-1)


def _extreme_singleton(sign):
    return INF if sign > 0 else NEG_INF


#: A price is a nonnegative Fraction or INF; a slack is a Fraction or NEG_INF.
Price = Union[Fraction, _Extreme]
PriceProfile = Mapping[str, Price]

F0 = Fraction(0)


def is_inf(price) -> bool:
    return price is INF


def parse_rational(text) -> Fraction:
    """Parse "n" or "n/d" (lowest-terms not required on input)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


def parse_price(text) -> Price:
    if text is INF or (isinstance(text, str) and text.strip().lower() == "inf"):
        return INF
    q = parse_rational(text)
    if q < 0:
        raise MarketError(f"prices must be nonnegative, got {q}")
    return q


def format_price(p: Price) -> str:
    return "inf" if p is INF else format_rational(p)


@dataclass(frozen=True)
class Demand:
    """A single-minded buyer: wants every member's good, at one total value.

    Parallel demands over the same member set are allowed; size-1 demands
    model single-good buyers.
    """

    id: str
    members: tuple
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "value", parse_rational(self.value))
        if not self.members:
            raise MarketError(f"demand {self.id}: members must be nonempty")
        if len(set(self.members)) != len(self.members):
            raise MarketError(f"demand {self.id}: members must be distinct")
        if self.value <= 0:
            raise MarketError(f"demand {self.id}: value must be positive")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MarketInstance:
    """Sellers plus the demands over them; a graph when all demands are pairs."""

    nodes: tuple
    demands: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "demands", tuple(self.demands))
        if len(set(self.nodes)) != len(self.nodes):
            raise MarketError("node ids must be unique")
        ids = [d.id for d in self.demands]
        if len(set(ids)) != len(ids):
            raise MarketError("demand ids must be unique")
        declared = set(self.nodes)
        for d in self.demands:
            for m in d.members:
                if m not in declared:
                    raise MarketError(f"demand {d.id} references undeclared node {m!r}")

    @property
    def is_graph(self) -> bool:
        return all(d.size == 2 for d in self.demands)

    @property
    def kind(self) -> str:
        return "graph" if self.is_graph else "hypergraph"

    @cached_property
    def demand_map(self):
        return {d.id: d for d in self.demands}

    @cached_property
    def node_index(self):
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def incidence(self):
        """node id -> tuple of incident demands, in declaration order."""
        inc = {v: [] for v in self.nodes}
        for d in self.demands:
            for m in d.members:
                inc[m].append(d)
        return {v: tuple(ds) for v, ds in inc.items()}

    def incident(self, node) -> tuple:
        return self.incidence[node]

    @cached_property
    def neighbor_map(self):
        """node id -> tuple of sellers sharing at least one demand with it."""
        nbrs = {v: set() for v in self.nodes}
        for d in self.demands:
            for m in d.members:
                nbrs[m].update(x for x in d.members if x != m)
        order = self.node_index
        return {v: tuple(sorted(s, key=order.__getitem__)) for v, s in nbrs.items()}


@dataclass(frozen=True)
class Outcome:
    """Sold set and revenue/welfare of one instance under one price profile."""

    sold: frozenset
    revenue_by_seller: Mapping[str, Fraction]
    total_revenue: Fraction
    realized_welfare: Fraction


def require_coverage(instance: MarketInstance, profile: PriceProfile):
    if set(profile) != set(instance.nodes):
        missing = set(instance.nodes) - set(profile)
        extra = set(profile) - set(instance.nodes)
        raise CoverageError(
            f"profile must cover exactly the node set (missing={sorted(missing)}, extra={sorted(extra)})"
        )


def evaluate(instance: MarketInstance, profile: PriceProfile) -> Outcome:
    """Which demands buy, and what every seller earns, under ``profile``.

    A demand with any member priced at INF is never sold; an INF-priced
    seller therefore has revenue 0.
    """
    require_coverage(instance, profile)
    sold = []
    revenue = {v: F0 for v in instance.nodes}
    realized = F0
    for d in instance.demands:
        total = F0
        feasible = True
        for m in d.members:
            p = profile[m]
            if p is INF:
                feasible = False
                break
            total += p
        if feasible and total <= d.value:
            sold.append(d.id)
            realized += d.value
            for m in d.members:
                revenue[m] += profile[m]
    total_revenue = sum(revenue.values(), F0)
    return Outcome(frozenset(sold), revenue, total_revenue, realized)


def slack(instance: MarketInstance, profile: PriceProfile, seller, demand_id):
    """What the seller could charge while keeping this demand buyable.

    Returns value minus the other members' prices (NEG_INF if any other
    member prices at INF); a size-1 demand's slack is its full value.
    """
    require_coverage(instance, profile)
    d = instance.demand_map.get(demand_id)
    if d is None:
        raise MarketError(f"unknown demand {demand_id!r}")
    if seller not in d.members:
        raise MembershipError(f"seller {seller!r} is not a member of demand {demand_id!r}")
    total = F0
    for m in d.members:
        if m == seller:
            continue
        p = profile[m]
        if p is INF:
            return NEG_INF
        total += p
    return d.value - total


def is_tight(instance: MarketInstance, profile: PriceProfile, demand_id) -> bool:
    """True iff every member is finite and the prices sum exactly to the value."""
    require_coverage(instance, profile)
    d = instance.demand_map.get(demand_id)
    if d is None:
        raise MarketError(f"unknown demand {demand_id!r}")
    total = F0
    for m in d.members:
        p = profile[m]
        if p is INF:
            return False
        total += p
    return total == d.value


def max_welfare(instance: MarketInstance) -> Fraction:
    """Sum of all demand values: the welfare of the all-zero profile."""
    return sum((d.value for d in instance.demands), F0)


# ---------------------------------------------------------------------------
# JSON serialization.  Round-trips are bit-exact: rationals travel as
# lowest-terms "n" / "n/d" strings, infinity as "inf".

def instance_to_json(instance: MarketInstance) -> dict:
    return {
        "nodes": list(instance.nodes),
        "demands": [
            {"id": d.id, "members": list(d.members), "value": format_rational(d.value)}
            for d in instance.demands
        ],
    }


def instance_from_json(doc: Mapping) -> MarketInstance:
    demands = tuple(
        Demand(id=str(d["id"]), members=tuple(d["members"]), value=parse_rational(d["value"]))
        for d in doc["demands"]
    )
    return MarketInstance(nodes=tuple(doc["nodes"]), demands=demands)


def profile_to_json(profile: PriceProfile) -> dict:
    return {"prices": {v: format_price(p) for v, p in profile.items()}}


def profile_from_json(doc: Mapping) -> dict:
    prices = doc["prices"] if "prices" in doc else doc
    return {str(v): parse_price(p) for v, p in prices.items()}


def graph_instance(nodes: Iterable, edges: Iterable, id_prefix="e") -> MarketInstance:
    """Build a graph instance from (a, b, value) triples; ids are e1, e2, ..."""
    demands = tuple(
        Demand(id=f"{id_prefix}{k}", members=(a, b), value=parse_rational(v))
        for k, (a, b, v) in enumerate(edges, start=1)
    )
    return MarketInstance(nodes=tuple(nodes), demands=demands)
