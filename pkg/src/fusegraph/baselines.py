"""Classical rank-aggregation methods used as comparison points.

Order-based: BordaCount, RRF, MRA, Condorcet, exact Kemeny (brute force,
tiny instances only). Score-based: the six Comb* combiners and RLSim, which
min-max normalize each rank's scores before combining.

Where the classical descriptions leave absent items open, this module fixes
them as follows: Borda gives an absent item 0 points from that rank; Comb*
lets an absent rank contribute nothing (it also lowers the occurrence count);
Condorcet treats absence as ranked worst; RLSim multiplies in the floor
epsilon. Ties are always broken by ascending item id, so every method is
deterministic and invariant to ranker order.
"""

from __future__ import annotations

import itertools
import statistics
from collections import defaultdict
from typing import Callable, Iterable, Sequence

from .errors import EmptyRankSet, MissingScores, TooManyItems
from .model import ItemId, RankSet, ScoredRank
from .retrieval import FusedRank

RRF_DEFAULT_K = 60.0
RLSIM_EPSILON = 0.01
KEMENY_DEFAULT_CAP = 8


def _check(rs: RankSet) -> int:
    if len(rs) == 0:
        raise EmptyRankSet(f"rank set for {rs.query!r} has no ranks")
    return len(rs)


def _depth(rs: RankSet, depth: int | None) -> int:
    return depth if depth is not None else max(rank.depth for rank in rs)


def _finalize(rs: RankSet, scores: dict[ItemId, float], depth: int | None) -> FusedRank:
    ordered = sorted(scores.items(), key=lambda pair: (-pair[1], pair[0]))
    return FusedRank(rs.query, tuple(ordered[: _depth(rs, depth)]), higher_is_better=True)


def _order_to_rank(rs: RankSet, order: Sequence[ItemId], depth: int | None) -> FusedRank:
    """Wrap a bare item order as a FusedRank with monotone 1/position scores."""
    entries = tuple(
        (item, 1.0 / pos) for pos, item in enumerate(order[: _depth(rs, depth)], start=1)
    )
    return FusedRank(rs.query, entries, higher_is_better=True)


def borda(rs: RankSet, depth: int | None = None) -> FusedRank:
    """BordaCount: an item earns L - position + 1 points per rank listing it."""
    _check(rs)
    length = _depth(rs, depth)
    scores: dict[ItemId, float] = defaultdict(float)
    for rank in rs:
        for pos, entry in enumerate(rank, start=1):
            scores[entry.item] += length - pos + 1
    return _finalize(rs, scores, depth)


def rrf(rs: RankSet, k: float = RRF_DEFAULT_K, depth: int | None = None) -> FusedRank:
    """Reciprocal rank fusion: sum of 1 / (k + position) over the ranks."""
    _check(rs)
    if k <= 0:
        raise ValueError(f"rrf constant must be positive, got {k}")
    scores: dict[ItemId, float] = defaultdict(float)
    for rank in rs:
        for pos, entry in enumerate(rank, start=1):
            scores[entry.item] += 1.0 / (k + pos)
    return _finalize(rs, scores, depth)


def _minmax(rank: ScoredRank, floor: float = 0.0) -> dict[ItemId, float]:
    """Min-max normalize one rank's scores onto [floor, 1].

    A rank whose scores are all equal maps every item to 1.0.
    """
    if not rank.entries:
        raise MissingScores(f"rank for {rank.query!r} under {rank.ranker!r} has no scores")
    values = [entry.score for entry in rank]
    lo, hi = min(values), max(values)
    if hi == lo:
        return {entry.item: 1.0 for entry in rank}
    span = hi - lo
    out = {}
    for entry in rank:
        if entry.score == hi:
            out[entry.item] = 1.0
        elif entry.score == lo:
            out[entry.item] = floor
        else:
            out[entry.item] = floor + (1.0 - floor) * (entry.score - lo) / span
    return out


COMB_VARIANTS = ("SUM", "MIN", "MAX", "MED", "ANZ", "MNZ")


def comb(rs: RankSet, variant: str, depth: int | None = None) -> FusedRank:
    """Comb* score combiners over per-rank min-max normalized scores.

    SUM/MIN/MAX/MED reduce the item's normalized scores from the ranks that
    contain it; ANZ divides the sum by that occurrence count, MNZ multiplies
    by it. A rank not containing the item contributes nothing (not a zero).
    """
    _check(rs)
    variant = variant.upper()
    if variant not in COMB_VARIANTS:
        raise ValueError(f"unknown Comb variant {variant!r}, expected one of {COMB_VARIANTS}")
    per_item: dict[ItemId, list[float]] = defaultdict(list)
    for rank in rs:
        for item, value in _minmax(rank).items():
            per_item[item].append(value)
    reducers: dict[str, Callable[[list[float]], float]] = {
        "SUM": sum,
        "MIN": min,
        "MAX": max,
        "MED": statistics.median,
        "ANZ": lambda vals: sum(vals) / len(vals),
        "MNZ": lambda vals: sum(vals) * len(vals),
    }
    reduce = reducers[variant]
    scores = {item: float(reduce(values)) for item, values in per_item.items()}
    return _finalize(rs, scores, depth)


def rlsim(rs: RankSet, epsilon: float = RLSIM_EPSILON, depth: int | None = None) -> FusedRank:
    """Product of per-rank scores, min-max normalized onto [epsilon, 1].

    The floor keeps a single zero from annihilating an item; a rank that does
    not contain the item multiplies in the floor as well.
    """
    _check(rs)
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    normalized = [_minmax(rank, floor=epsilon) for rank in rs]
    items: set[ItemId] = set()
    for mapping in normalized:
        items.update(mapping)
    scores = {}
    for item in items:
        product = 1.0
        for mapping in normalized:
            product *= mapping.get(item, epsilon)
        scores[item] = product
    return _finalize(rs, scores, depth)


def mra(rs: RankSet, depth: int | None = None) -> FusedRank:
    """Median rank aggregation: majority sweep over increasing depths.

    At each depth d, items seen in positions <= d by more than half of the
    ranks are appended (most occurrences first, then earliest qualifying
    depth, then item id). Items that never reach a majority are appended by
    total occurrence count, then item id.
    """
    m = _check(rs)
    length = _depth(rs, depth)
    threshold = m / 2.0
    counts: dict[ItemId, int] = defaultdict(int)
    first_reach: dict[ItemId, int] = {}
    placed: list[ItemId] = []
    placed_set: set[ItemId] = set()
    max_len = max(len(rank) for rank in rs)
    for d in range(1, max_len + 1):
        for rank in rs:
            if len(rank) >= d:
                counts[rank.entries[d - 1].item] += 1
        qualifying = [
            item for item, c in counts.items() if c > threshold and item not in placed_set
        ]
        for item in qualifying:
            first_reach.setdefault(item, d)
        qualifying.sort(key=lambda item: (-counts[item], first_reach[item], item))
        for item in qualifying:
            placed.append(item)
            placed_set.add(item)
            if len(placed) == length:
                break
        if len(placed) == length:
            break
    total_occurrence: dict[ItemId, int] = defaultdict(int)
    for rank in rs:
        for entry in rank:
            total_occurrence[entry.item] += 1
    leftovers = sorted(
        (item for item in total_occurrence if item not in placed_set),
        key=lambda item: (-total_occurrence[item], item),
    )
    return _order_to_rank(rs, placed + leftovers, depth)


def condorcet(rs: RankSet, depth: int | None = None) -> FusedRank:
    """Order items by pairwise wins; a pair is won by strict majority.

    Only ranks containing at least one of the pair vote, and an absent item
    loses to a present one. Cycles fall back to the item-id tie rule.
    """
    _check(rs)
    items = sorted({entry.item for rank in rs for entry in rank})
    wins: dict[ItemId, float] = {item: 0.0 for item in items}
    for x, y in itertools.combinations(items, 2):
        x_better = y_better = 0
        for rank in rs:
            px = rank.positions.get(x)
            py = rank.positions.get(y)
            if px is None and py is None:
                continue
            if py is None or (px is not None and px < py):
                x_better += 1
            else:
                y_better += 1
        if x_better > y_better:
            wins[x] += 1
        elif y_better > x_better:
            wins[y] += 1
    return _finalize(rs, wins, depth)


def kendall_discordance(order: Sequence[ItemId], rs: RankSet) -> int:
    """Total number of item pairs each rank orders opposite to ``order``.

    Items absent from a rank count as tied at the bottom: a pair with both
    absent is tied (no discordance either way); with one absent, the present
    item is ranked better.
    """
    total = 0
    for rank in rs:
        positions = rank.positions
        for i, x in enumerate(order):
            px = positions.get(x)
            for y in order[i + 1 :]:
                py = positions.get(y)
                if px is None and py is None:
                    continue
                if px is None or (py is not None and py < px):
                    total += 1
    return total


def kemeny_exact(
    rs: RankSet, cap: int = KEMENY_DEFAULT_CAP, depth: int | None = None
) -> FusedRank:
    """Exact Kemeny consensus by exhaustive permutation search.

    Minimizes total discordance to the input ranks; among optimal
    permutations the lexicographically smallest is returned. Instances with
    more than ``cap`` distinct items are rejected (the search is factorial).
    """
    _check(rs)
    items = sorted({entry.item for rank in rs for entry in rank})
    if len(items) > cap:
        raise TooManyItems(f"{len(items)} distinct items exceed the Kemeny cap of {cap}")
    best_order: tuple[ItemId, ...] | None = None
    best_cost = None
    for permutation in itertools.permutations(items):
        cost = kendall_discordance(permutation, rs)
        if best_cost is None or cost < best_cost:
            best_order, best_cost = permutation, cost
    assert best_order is not None
    return _order_to_rank(rs, best_order, depth)


METHODS: dict[str, Callable[..., FusedRank]] = {
    "borda": borda,
    "rrf": rrf,
    "combsum": lambda rs, **kw: comb(rs, "SUM", **kw),
    "combmin": lambda rs, **kw: comb(rs, "MIN", **kw),
    "combmax": lambda rs, **kw: comb(rs, "MAX", **kw),
    "combmed": lambda rs, **kw: comb(rs, "MED", **kw),
    "combanz": lambda rs, **kw: comb(rs, "ANZ", **kw),
    "combmnz": lambda rs, **kw: comb(rs, "MNZ", **kw),
    "mra": mra,
    "condorcet": condorcet,
    "rlsim": rlsim,
    "kemeny": kemeny_exact,
}


def aggregate(method: str, rs: RankSet, **params) -> FusedRank:
    """Dispatch to an aggregation method by (case-insensitive) name."""
    key = method.lower()
    if key not in METHODS:
        raise ValueError(f"unknown aggregation method {method!r}; known: {sorted(METHODS)}")
    return METHODS[key](rs, **params)


def method_names() -> Iterable[str]:
    return tuple(METHODS)
