"""Single-seller exact best responses.

A seller's revenue as a function of its own price is piecewise linear with
breakpoints at its slacks, so the argmax is attained on the finite set
{0} union {positive finite slacks}.  Tie policies pick among maximizers and
decide what a seller with no achievable revenue does (price 0 when playing
non-maliciously, a caller-supplied fallback inside the sweep algorithms).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .market import F0, INF, MarketInstance, PriceProfile, parse_rational, require_coverage


@dataclass(frozen=True)
class PreferLowest:
    """Among revenue-maximizing prices, pick the lowest (sells the most)."""


@dataclass(frozen=True)
class PreferHighest:
    """Among revenue-maximizing prices, pick the highest."""


@dataclass(frozen=True)
class NonMalicious:
    """Force price 0 whenever no price earns anything; else defer to base."""

    base: Union[PreferLowest, PreferHighest] = field(default_factory=PreferLowest)


@dataclass(frozen=True)
class PathFallback:
    """Force a fixed fallback price at zero achievable revenue; else base."""

    fallback_price: Fraction
    base: Union[PreferLowest, PreferHighest] = field(default_factory=PreferLowest)

    def __post_init__(self):
        object.__setattr__(self, "fallback_price", parse_rational(self.fallback_price))


TiePolicy = Union[PreferLowest, PreferHighest, NonMalicious, PathFallback]


def describe_policy(policy: TiePolicy) -> str:
    if isinstance(policy, NonMalicious):
        return f"non-malicious({describe_policy(policy.base)})"
    if isinstance(policy, PathFallback):
        return f"path-fallback({policy.fallback_price},{describe_policy(policy.base)})"
    return "lowest" if isinstance(policy, PreferLowest) else "highest"


@dataclass(frozen=True)
class BestResponse:
    price: Fraction
    utility: Fraction
    candidates_considered: tuple


def finite_slacks(instance: MarketInstance, profile: PriceProfile, seller) -> list:
    """Finite slacks of the seller over its incident demands (NEG_INF dropped)."""
    require_coverage(instance, profile)
    out = []
    for d in instance.incident(seller):
        total = F0
        feasible = True
        for m in d.members:
            if m == seller:
                continue
            p = profile[m]
            if p is INF:
                feasible = False
                break
            total += p
        if feasible:
            out.append(d.value - total)
    return out


def candidate_prices(instance: MarketInstance, profile: PriceProfile, seller) -> list:
    """{0} plus every positive finite slack, deduplicated ascending.

    Some element always attains the global maximum of p * #{slack >= p}.
    """
    cands = {F0}
    for s in finite_slacks(instance, profile, seller):
        if s > 0:
            cands.add(s)
    return sorted(cands)


def _utility_at(price, slacks) -> Fraction:
    if price == 0:
        return F0
    return price * sum(1 for s in slacks if s >= price)


def best_response(instance: MarketInstance, profile: PriceProfile, seller,
                  policy: TiePolicy = PreferLowest()) -> BestResponse:
    """Exact argmax of the seller's revenue curve, others' prices fixed."""
    slacks = finite_slacks(instance, profile, seller)
    cands = candidate_prices(instance, profile, seller)
    best = F0
    for p in cands:
        u = _utility_at(p, slacks)
        if u > best:
            best = u
    if best == 0:
        price = policy.fallback_price if isinstance(policy, PathFallback) else F0
        return BestResponse(price=price, utility=F0, candidates_considered=tuple(cands))
    maximizers = [p for p in cands if _utility_at(p, slacks) == best]
    base = policy.base if isinstance(policy, (NonMalicious, PathFallback)) else policy
    price = max(maximizers) if isinstance(base, PreferHighest) else min(maximizers)
    return BestResponse(price=price, utility=best, candidates_considered=tuple(cands))


def seller_utility(instance: MarketInstance, profile: PriceProfile, seller) -> Fraction:
    """Current revenue of one seller: price times its sold incident demands."""
    p = profile[seller]
    if p is INF:
        return F0
    if p == 0:
        return F0
    slacks = finite_slacks(instance, profile, seller)
    return p * sum(1 for s in slacks if s >= p)


@dataclass(frozen=True)
class ResponseCheck:
    ok: bool
    current_utility: Fraction
    witness_price: Optional[Fraction] = None
    witness_utility: Optional[Fraction] = None


def is_best_responding(instance: MarketInstance, profile: PriceProfile, seller,
                       require_non_malicious: bool = False) -> ResponseCheck:
    """Is the seller's current price optimal (and non-malicious, if required)?

    A seller whose best achievable utility is 0 is best responding at any
    price in the plain sense, but only at price 0 in the non-malicious sense.
    On failure the witness carries a strictly improving (or 0-restoring) price.
    """
    current = seller_utility(instance, profile, seller)
    br = best_response(instance, profile, seller,
                       NonMalicious() if require_non_malicious else PreferLowest())
    if current < br.utility:
        return ResponseCheck(False, current, br.price, br.utility)
    if require_non_malicious and br.utility == 0 and profile[seller] != 0:
        return ResponseCheck(False, current, F0, F0)
    return ResponseCheck(True, current)
