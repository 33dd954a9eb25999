"""Best-reply procedures: directional sweeps on paths and cycles, the
recursive tree dynamics, the fixed-price tree sweep, and a generic
scheduled loop for convergence experiments.

Every run produces a replayable DynamicsTrace; non-termination is a loud
CapReached verdict (a finding, never a crash), since convergence of the
generic loop on arbitrary graphs is only conjectured.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .market import (
    F0,
    INF,
    KindError,
    MarketError,
    MarketInstance,
    format_price,
    parse_price,
    parse_rational,
)
from .bestresponse import (
    NonMalicious,
    PathFallback,
    PreferLowest,
    TiePolicy,
    best_response,
    describe_policy,
    is_best_responding,
)


@dataclass(frozen=True)
class TraceStep:
    index: int
    seller: str
    old_price: object
    new_price: object
    utility: Fraction


@dataclass(frozen=True)
class DynamicsTrace:
    initial_profile: Mapping
    steps: tuple
    final_profile: Mapping
    terminated: str  # "Converged" | "CapReached"
    step_cap: int
    policy: str = ""
    schedule: str = ""

    @property
    def converged(self) -> bool:
        return self.terminated == "Converged"


def replay_trace(trace: DynamicsTrace) -> dict:
    """Re-apply the recorded steps to the initial profile."""
    profile = dict(trace.initial_profile)
    for step in trace.steps:
        profile[step.seller] = step.new_price
    return profile


def trace_to_json(trace: DynamicsTrace) -> dict:
    return {
        "initial_prices": {v: format_price(p) for v, p in trace.initial_profile.items()},
        "steps": [
            {
                "index": s.index,
                "seller": s.seller,
                "old": format_price(s.old_price),
                "new": format_price(s.new_price),
                "utility": str(s.utility),
            }
            for s in trace.steps
        ],
        "final_prices": {v: format_price(p) for v, p in trace.final_profile.items()},
        "terminated": trace.terminated,
        "step_cap": trace.step_cap,
        "policy": trace.policy,
        "schedule": trace.schedule,
    }


def trace_from_json(doc: Mapping) -> DynamicsTrace:
    steps = tuple(
        TraceStep(
            index=int(s["index"]),
            seller=str(s["seller"]),
            old_price=parse_price(s["old"]),
            new_price=parse_price(s["new"]),
            utility=parse_rational(s["utility"]),
        )
        for s in doc["steps"]
    )
    return DynamicsTrace(
        initial_profile={v: parse_price(p) for v, p in doc["initial_prices"].items()},
        steps=steps,
        final_profile={v: parse_price(p) for v, p in doc["final_prices"].items()},
        terminated=str(doc["terminated"]),
        step_cap=int(doc["step_cap"]),
        policy=str(doc.get("policy", "")),
        schedule=str(doc.get("schedule", "")),
    )


@dataclass(frozen=True)
class RoundRobin:
    pass


@dataclass(frozen=True)
class RandomUniform:
    seed: int


@dataclass(frozen=True)
class FixedOrder:
    order: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))


Schedule = object  # RoundRobin | RandomUniform | FixedOrder


def describe_schedule(schedule) -> str:
    if isinstance(schedule, RandomUniform):
        return f"random({schedule.seed})"
    if isinstance(schedule, FixedOrder):
        return "fixed(" + ",".join(schedule.order) + ")"
    return "round-robin"


class _CapHit(Exception):
    pass


class _Run:
    """Mutable state of one dynamics run; enforces the step cap."""

    def __init__(self, instance, initial, cap, policy="", schedule=""):
        self.instance = instance
        self.initial = dict(initial)
        self.profile = dict(initial)
        self.steps = []
        self.cap = cap
        self.policy = policy
        self.schedule = schedule

    def set_price(self, seller, price, utility):
        if len(self.steps) >= self.cap:
            raise _CapHit()
        self.steps.append(TraceStep(len(self.steps), seller, self.profile[seller], price, utility))
        self.profile[seller] = price

    def to_trace(self, terminated) -> DynamicsTrace:
        return DynamicsTrace(
            initial_profile=dict(self.initial),
            steps=tuple(self.steps),
            final_profile=dict(self.profile),
            terminated=terminated,
            step_cap=self.cap,
            policy=self.policy,
            schedule=self.schedule,
        )


# ---------------------------------------------------------------------------
# Shape validation for the structured algorithms.

def _pair_adjacency(instance: MarketInstance):
    if not instance.is_graph:
        raise KindError("this operation requires a graph instance")
    adj = {v: [] for v in instance.nodes}
    for d in instance.demands:
        a, b = d.members
        adj[a].append((b, d))
        adj[b].append((a, d))
    return adj


def _connected(instance, adj) -> bool:
    if not instance.nodes:
        return True
    seen = {instance.nodes[0]}
    stack = [instance.nodes[0]]
    while stack:
        v = stack.pop()
        for u, _ in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(instance.nodes)


def path_order(instance: MarketInstance) -> list:
    """Node sequence of a simple path; raises MarketError otherwise."""
    adj = _pair_adjacency(instance)
    n = len(instance.nodes)
    if n < 2 or len(instance.demands) != n - 1 or not _connected(instance, adj):
        raise MarketError("instance is not a simple path")
    degrees = {v: len(adj[v]) for v in instance.nodes}
    ends = [v for v in instance.nodes if degrees[v] == 1]
    if len(ends) != 2 or any(deg > 2 for deg in degrees.values()):
        raise MarketError("instance is not a simple path")
    start = ends[0]  # endpoint earliest in declaration order
    order = [start]
    prev = None
    while len(order) < n:
        nxt = [u for u, _ in adj[order[-1]] if u != prev]
        prev = order[-1]
        order.append(nxt[0])
    return order


def cycle_order(instance: MarketInstance) -> list:
    """Node sequence of a simple cycle (>= 3 nodes); raises otherwise."""
    adj = _pair_adjacency(instance)
    n = len(instance.nodes)
    if n < 3 or len(instance.demands) != n or not _connected(instance, adj):
        raise MarketError("instance is not a simple cycle")
    if any(len(adj[v]) != 2 for v in instance.nodes):
        raise MarketError("instance is not a simple cycle")
    pairs = {frozenset(d.members) for d in instance.demands}
    if len(pairs) != n:
        raise MarketError("instance is not a simple cycle (parallel edges)")
    start = instance.nodes[0]
    idx = instance.node_index
    first = min((u for u, _ in adj[start]), key=idx.__getitem__)
    order = [start, first]
    while len(order) < n:
        nxt = [u for u, _ in adj[order[-1]] if u != order[-2]]
        order.append(nxt[0])
    return order


def require_tree(instance: MarketInstance):
    adj = _pair_adjacency(instance)
    n = len(instance.nodes)
    if n == 0 or len(instance.demands) != n - 1 or not _connected(instance, adj):
        raise MarketError("instance is not a tree")
    return adj


def _edge_between(adj, a, b):
    for u, d in adj[a]:
        if u == b:
            return d
    raise MarketError(f"no edge between {a!r} and {b!r}")


# ---------------------------------------------------------------------------
# Directional sweep for paths.

def _sweep(instance, adj, order, include_wraparound=False):
    """All prices start at infinity, the first seller at 0; then each seller
    in order best responds, falling back to the previous edge's value when
    nothing earns.  With ``include_wraparound`` the first seller replies
    last (cycle variant)."""
    initial = {v: INF for v in instance.nodes}
    initial[order[0]] = F0
    n = len(order)
    cap = 4 * n + 4 if include_wraparound else n - 1  # extra room for the continuation
    run = _Run(instance, initial, cap,
               policy="path-fallback(lowest)",
               schedule="sweep(" + ",".join(order) + ")")
    seq = list(range(1, n)) + ([0] if include_wraparound else [])
    for k in seq:
        seller = order[k]
        prev = order[k - 1] if k > 0 else order[-1]
        fallback = _edge_between(adj, prev, seller).value
        br = best_response(instance, run.profile, seller, PathFallback(fallback))
        run.set_price(seller, br.price, br.utility)
    return run


def path_algorithm(instance: MarketInstance):
    """Run the sweep in both directions and keep the richer equilibrium.

    Returns (forward trace, backward trace, chosen profile).  Each pass ends
    in a NE; the chosen one earns at least half the maximum welfare.
    """
    from .market import evaluate

    adj = _pair_adjacency(instance)
    order = path_order(instance)
    fwd = _sweep(instance, adj, order)
    bwd = _sweep(instance, adj, list(reversed(order)))
    rev_f = evaluate(instance, fwd.profile).total_revenue
    rev_b = evaluate(instance, bwd.profile).total_revenue
    chosen = fwd.profile if rev_f >= rev_b else bwd.profile
    return fwd.to_trace("Converged"), bwd.to_trace("Converged"), dict(chosen)


# ---------------------------------------------------------------------------
# Cycles: sweep once around, then let best replies settle.

def _cycle_pass(instance, adj, order):
    run = _sweep(instance, adj, order, include_wraparound=True)
    n = len(order)
    sweep_steps = len(run.steps)
    verdict = "Converged"
    try:
        consecutive_ok = 0
        at = 1  # continuation starts at the seller after the anchor
        while consecutive_ok < n:
            seller = order[at % n]
            at += 1
            if is_best_responding(instance, run.profile, seller).ok:
                consecutive_ok += 1
            else:
                br = best_response(instance, run.profile, seller, PreferLowest())
                run.set_price(seller, br.price, br.utility)
                consecutive_ok = 1
    except _CapHit:
        verdict = "CapReached"
    return run.to_trace(verdict), len(run.steps) - sweep_steps


def _constant_trace(instance, profile, note):
    profile = dict(profile)
    return DynamicsTrace(
        initial_profile=profile,
        steps=(),
        final_profile=dict(profile),
        terminated="Converged",
        step_cap=0,
        policy=note,
        schedule="closed-form",
    )


def cycle_algorithm(instance: MarketInstance):
    """Equilibrium with at least a quarter of the maximum welfare on a cycle.

    All-equal cycles price everyone at half the value (fully efficient);
    a triangle prices 0 at the node off its cheapest edge and the other two
    nodes at their remaining edge's value; otherwise the directional sweep
    runs with a best-reply continuation, in both directions, keeping the
    richer result.
    """
    from .market import evaluate

    adj = _pair_adjacency(instance)
    order = cycle_order(instance)
    values = {d.id: d.value for d in instance.demands}
    distinct = set(values.values())
    if len(distinct) == 1:
        half = next(iter(distinct)) / 2
        profile = {v: half for v in instance.nodes}
        return _constant_trace(instance, profile, "all-equal half split"), profile
    if len(instance.nodes) == 3:
        cheapest = min(instance.demands, key=lambda d: (d.value, instance.demands.index(d)))
        profile = {}
        for v in instance.nodes:
            if v not in cheapest.members:
                profile[v] = F0
            else:
                other = [d for d in adj[v] if d[1].id != cheapest.id][0][1]
                profile[v] = other.value
        return _constant_trace(instance, profile, "triangle closed form"), profile
    cw, cw_extra = _cycle_pass(instance, adj, order)
    mirrored = [order[0]] + list(reversed(order[1:]))
    ccw, ccw_extra = _cycle_pass(instance, adj, mirrored)
    rev_cw = evaluate(instance, cw.final_profile).total_revenue
    rev_ccw = evaluate(instance, ccw.final_profile).total_revenue
    if rev_cw >= rev_ccw:
        return cw, dict(cw.final_profile)
    return ccw, dict(ccw.final_profile)


def cycle_continuation_steps(trace: DynamicsTrace, n: int) -> int:
    """Steps taken after the initial sweep of all n sellers."""
    return max(0, len(trace.steps) - n)


# ---------------------------------------------------------------------------
# Trees with one seller pinned: BFS sweep from that seller.

def tree_fixed_price(instance: MarketInstance, seller, fixed_price):
    """Equilibrium of a tree with one seller's price pinned.

    BFS from the pinned seller; everyone else best responds, pricing at the
    value of the edge toward the pinned seller when nothing earns.  The
    pinned seller ends with utility fixed_price times the number of its
    incident edges with value strictly above fixed_price.
    """
    adj = require_tree(instance)
    if seller not in adj:
        raise MarketError(f"unknown seller {seller!r}")
    fixed_price = parse_rational(fixed_price)
    if fixed_price < 0:
        raise MarketError("fixed price must be nonnegative")
    idx = instance.node_index
    initial = {v: INF for v in instance.nodes}
    initial[seller] = fixed_price
    run = _Run(instance, initial, cap=len(instance.nodes),
               policy="path-fallback(lowest)", schedule=f"bfs({seller})")
    visited = {seller}
    queue = [seller]
    while queue:
        v = queue.pop(0)
        for u, d in sorted(adj[v], key=lambda t: idx[t[0]]):
            if u in visited:
                continue
            visited.add(u)
            br = best_response(instance, run.profile, u, PathFallback(d.value))
            run.set_price(u, br.price, br.utility)
            queue.append(u)
    return run.to_trace("Converged"), dict(run.profile)


# ---------------------------------------------------------------------------
# Recursive tree dynamics: always terminates in a non-malicious NE.

def _settle(instance, run, seller):
    chk = is_best_responding(instance, run.profile, seller, require_non_malicious=True)
    if not chk.ok:
        br = best_response(instance, run.profile, seller, NonMalicious())
        run.set_price(seller, br.price, br.utility)


def _free_components(instance, adj, free):
    comps = []
    remaining = set(free)
    for v in instance.nodes:
        if v not in remaining:
            continue
        comp = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for u, _ in adj[x]:
                if u in remaining and u not in comp:
                    comp.add(u)
                    stack.append(u)
        remaining -= comp
        comps.append([x for x in instance.nodes if x in comp])
    return comps


def _stabilize_tree(instance, adj, run, comp):
    if len(comp) == 1:
        _settle(instance, run, comp[0])
        return
    free = set(comp)
    leaf = next(v for v in comp if sum(1 for u, _ in adj[v] if u in free) == 1)
    rest = [v for v in comp if v != leaf]
    while True:
        _settle(instance, run, leaf)
        _stabilize_tree(instance, adj, run, rest)
        # Stop once the leaf needs no further reply to the stabilized rest:
        # the repeated-reply / repeated-neighbor-price / tight-edge stop
        # cases all manifest as this check passing.
        if is_best_responding(instance, run.profile, leaf, require_non_malicious=True).ok:
            return


def tree_dynamics(instance: MarketInstance, initial, cap: Optional[int] = None, fixed=()):
    """Recursive best replies on a tree, from any initial profile.

    Peels the first free leaf u: u replies non-maliciously, the rest of the
    tree is stabilized recursively with u held fixed, and the pair repeats
    until u's reply is stable.  Nodes in ``fixed`` never move (a tree with
    fixed-price leaves attached is the shape the recursion itself produces).
    Converged runs end in a non-malicious NE of the free sellers; hitting
    the cap is reported as CapReached, never silently.
    """
    adj = require_tree(instance)
    if cap is None:
        cap = 10**4 * len(instance.nodes)
    fixed = set(fixed)
    run = _Run(instance, dict(initial), cap,
               policy="non-malicious(lowest)", schedule="recursive-leaf")
    free = [v for v in instance.nodes if v not in fixed]
    verdict = "Converged"
    try:
        for comp in _free_components(instance, adj, free):
            _stabilize_tree(instance, adj, run, comp)
    except _CapHit:
        verdict = "CapReached"
    return run.to_trace(verdict), dict(run.profile)


# ---------------------------------------------------------------------------
# Generic scheduled best-reply loop (the convergence-conjecture harness).

def generic_dynamics(instance: MarketInstance, initial, schedule=RoundRobin(),
                     policy: Optional[TiePolicy] = None, cap: Optional[int] = None) -> DynamicsTrace:
    """Iterate policy-conformant best replies under a schedule until every
    seller is best responding (non-maliciously so, when the policy is
    NonMalicious) or the step cap is hit.

    A scheduled seller already best responding is skipped without consuming
    a step.  Deterministic given the schedule seed.
    """
    if policy is None:
        policy = NonMalicious()
    refined = isinstance(policy, NonMalicious)
    n = len(instance.nodes)
    if cap is None:
        cap = 50 * n * max(1, len(instance.demands))
    run = _Run(instance, dict(initial), cap,
               policy=describe_policy(policy), schedule=describe_schedule(schedule))
    if n == 0:
        return run.to_trace("Converged")

    if isinstance(schedule, FixedOrder):
        if set(schedule.order) != set(instance.nodes):
            raise MarketError("FixedOrder must cover exactly the node set")
        order = list(schedule.order)
    else:
        order = list(instance.nodes)
    rng = random.Random(schedule.seed) if isinstance(schedule, RandomUniform) else None
    neighbors = instance.neighbor_map

    # A seller leaves the dirty set once verified as best responding; only a
    # neighbor's price change can invalidate that, so convergence == empty set.
    dirty = set(instance.nodes)
    pos = 0
    ticks = 0
    guard = 1000 * n * (cap + n + 1)
    try:
        while dirty:
            ticks += 1
            if ticks > guard:
                raise RuntimeError("schedule failed to reach a non-best-responding seller")
            if rng is not None:
                seller = order[rng.randrange(n)]
            else:
                seller = order[pos % n]
                pos += 1
            if seller not in dirty:
                continue
            chk = is_best_responding(instance, run.profile, seller, refined)
            if chk.ok:
                dirty.discard(seller)
                continue
            br = best_response(instance, run.profile, seller, policy)
            run.set_price(seller, br.price, br.utility)
            dirty.discard(seller)
            dirty.update(neighbors[seller])
    except _CapHit:
        return run.to_trace("CapReached")
    return run.to_trace("Converged")
