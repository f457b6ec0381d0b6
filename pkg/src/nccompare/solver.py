"""IDNC encoding: maximal encoding sets, minimal collections, selection, bounds.

Packets are column indices 0..K-1 of the governing conflict matrix. Sets of
packets are carried around as int bitmasks internally; ``EncodingSet`` and
``Collection`` are the public, hashable views.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .feedback import ConflictMatrix, DemandSets

# Above either of these the exact search is skipped in favour of the greedy cover.
EXACT_MAX_PACKETS = 20
EXACT_MAX_SETS = 5000
ORACLE_MAX_PACKETS = 12


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


@dataclass(frozen=True, order=True)
class EncodingSet:
    """Packets XOR-ed together in one coded transmission."""

    packets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(sorted(set(self.packets))))

    @classmethod
    def from_mask(cls, mask: int) -> EncodingSet:
        return cls(_bits(mask))

    @property
    def mask(self) -> int:
        m = 0
        for p in self.packets:
            m |= 1 << p
        return m

    def __contains__(self, packet: int) -> bool:
        return packet in self.packets

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self):
        return iter(self.packets)


@dataclass(frozen=True)
class Collection:
    """An ordered list of maximal encoding sets meant to cover every wanted packet."""

    sets: tuple[EncodingSet, ...]
    n_packets: int
    sigma: int | None = None
    suboptimal: bool = False
    diversities: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        d = [0] * self.n_packets
        for s in self.sets:
            for p in s.packets:
                d[p] += 1
        object.__setattr__(self, "diversities", tuple(d))

    def __len__(self) -> int:
        return len(self.sets)

    @property
    def signature(self) -> tuple[tuple[int, ...], ...]:
        """Order-independent identity: sorted list of sorted packet tuples."""
        return tuple(sorted(s.packets for s in self.sets))

    @property
    def covers_all(self) -> bool:
        return all(d >= 1 for d in self.diversities)

    def cumulative_diversity(self, packet: int, u: int) -> int:
        """How many of the first ``u`` sets contain ``packet``."""
        return sum(1 for s in self.sets[:u] if packet in s)

    def to_lists(self, packet_ids: Sequence[int] | None = None) -> list[list[int]]:
        if packet_ids is None:
            return [list(s.packets) for s in self.sets]
        return [[packet_ids[p] for p in s.packets] for s in self.sets]


def sigma(collection: Collection, t_sizes: Sequence[int]) -> int:
    """Selection score: sum over packets of diversity times number of receivers wanting it."""
    return sum(d * t for d, t in zip(collection.diversities, t_sizes))


def _compatible_masks(c: ConflictMatrix) -> list[int]:
    k = c.n_packets
    full = (1 << k) - 1
    return [full & ~c.masks[i] & ~(1 << i) for i in range(k)]


def _bron_kerbosch(adj: list[int], r: int, p: int, x: int, out: list[int]):
    if not p and not x:
        out.append(r)
        return
    # pivot: vertex of P|X with most neighbours in P
    pivot, best = -1, -1
    px = p | x
    while px:
        low = px & -px
        v = low.bit_length() - 1
        px ^= low
        cnt = (adj[v] & p).bit_count()
        if cnt > best:
            pivot, best = v, cnt
    cand = p & ~adj[pivot]
    while cand:
        low = cand & -cand
        v = low.bit_length() - 1
        cand ^= low
        _bron_kerbosch(adj, r | low, p & adj[v], x & adj[v], out)
        p &= ~low
        x |= low


def maximal_set_masks(c: ConflictMatrix) -> list[int]:
    """Maximal cliques of the compatibility graph as bitmasks, in canonical order."""
    k = c.n_packets
    if k == 0:
        return []
    adj = _compatible_masks(c)
    out: list[int] = []
    _bron_kerbosch(adj, 0, (1 << k) - 1, 0, out)
    out.sort(key=_bits)
    return out


def maximal_encoding_sets(c: ConflictMatrix) -> list[EncodingSet]:
    return [EncodingSet.from_mask(m) for m in maximal_set_masks(c)]


def is_maximal(s: EncodingSet, c: ConflictMatrix) -> bool:
    """No two members conflict, and every outside packet conflicts with some member."""
    m = s.mask
    for p in s.packets:
        if c.masks[p] & m:
            return False
    for q in range(c.n_packets):
        if not m >> q & 1 and not c.masks[q] & m:
            return False
    return True


def _min_collection_masks(masks: Sequence[int], k: int, first_only: bool = False) -> list[int]:
    """Level-by-level branching search. Returns collections as bitmasks over set indices."""
    full = (1 << k) - 1
    if k == 0:
        return [0]
    if not masks:
        raise ValueError("no encoding sets given for a non-empty packet set")
    union = 0
    for m in masks:
        union |= m
    if union & full != full:
        raise ValueError("encoding sets do not cover every packet")
    containing: list[list[int]] = [[] for _ in range(k)]
    for idx, m in enumerate(masks):
        for p in _bits(m):
            containing[p].append(idx)
    # packet order used when picking the branching packet: smallest diversity, then lowest index
    pick_order = sorted(range(k), key=lambda p: (len(containing[p]), p))

    level: dict[int, int] = {0: 0}  # collection (bitmask over set indices) -> covered packets
    while True:
        done = [col for col, cov in level.items() if cov == full]
        if done:
            done.sort()
            return done[:1] if first_only else done
        nxt: dict[int, int] = {}
        for col, cov in level.items():
            for p in pick_order:
                if not cov >> p & 1:
                    break
            for idx in containing[p]:
                bit = 1 << idx
                if col & bit:
                    continue
                ncol = col | bit
                if ncol not in nxt:
                    nxt[ncol] = cov | masks[idx]
        level = nxt


def minimal_collections(sets: Sequence[EncodingSet], k: int) -> list[Collection]:
    """All smallest collections of ``sets`` in which every packet appears at least once.

    Duplicates reached along different branches are merged. Member sets keep
    their input order inside each collection; the returned list is sorted by
    signature.
    """
    masks = [s.mask for s in sets]
    if k > 0 and not sets:
        raise ValueError("empty set list for a non-empty packet set")
    found = _min_collection_masks(masks, k)
    cols = [Collection(tuple(sets[i] for i in _bits(col)), k) for col in found]
    cols.sort(key=lambda c: c.signature)
    return cols


def min_collection_size(c: ConflictMatrix) -> int:
    if c.n_packets == 0:
        return 0
    masks = maximal_set_masks(c)
    return len(_bits(_min_collection_masks(masks, c.n_packets, first_only=True)[0]))


def order_by_benefit(sets: Iterable[EncodingSet], t_sizes: Sequence[int]) -> list[EncodingSet]:
    """Greedy transmission order: next set is the one whose not-yet-sent packets are wanted
    by the most receivers; ties go to the lexicographically smaller packet tuple."""
    remaining = sorted(sets, key=lambda s: s.packets)
    ordered: list[EncodingSet] = []
    sent = 0
    while remaining:
        best_i, best_gain = 0, -1
        for i, s in enumerate(remaining):
            gain = sum(t_sizes[p] for p in s.packets if not sent >> p & 1)
            if gain > best_gain:
                best_i, best_gain = i, gain
        s = remaining.pop(best_i)
        ordered.append(s)
        sent |= s.mask
    return ordered


def marginal_benefits(collection: Collection, t_sizes: Sequence[int]) -> list[int]:
    sent = 0
    out = []
    for s in collection.sets:
        out.append(sum(t_sizes[p] for p in s.packets if not sent >> p & 1))
        sent |= s.mask
    return out


def select_and_order(collections: Sequence[Collection], demands: DemandSets,
                     reorder: bool = True) -> Collection:
    """Pick the collection maximising sigma (ties: smallest signature) and order its sets."""
    if not collections:
        raise ValueError("no collections to choose from")
    sizes = {len(c) for c in collections}
    if len(sizes) != 1:
        raise ValueError(f"collections differ in size: {sorted(sizes)}")
    t = demands.t_sizes
    best = min(collections, key=lambda c: (-sigma(c, t), c.signature))
    sets = order_by_benefit(best.sets, t) if reorder else list(best.sets)
    return Collection(tuple(sets), best.n_packets, sigma=sigma(best, t), suboptimal=best.suboptimal)


def greedy_collection(sets: Sequence[EncodingSet], k: int) -> Collection:
    """Cover packets greedily: each step takes the set with the most uncovered packets."""
    if k > 0 and not sets:
        raise ValueError("empty set list for a non-empty packet set")
    full = (1 << k) - 1
    candidates = sorted(sets, key=lambda s: s.packets)
    masks = [s.mask for s in candidates]
    covered = 0
    chosen: list[EncodingSet] = []
    while covered != full:
        best_i, best_gain = -1, 0
        for i, m in enumerate(masks):
            gain = (m & ~covered).bit_count()
            if gain > best_gain:
                best_i, best_gain = i, gain
        if best_i < 0:
            raise ValueError("encoding sets do not cover every packet")
        chosen.append(candidates[best_i])
        covered |= masks[best_i]
    return Collection(tuple(chosen), k)


def _containing(masks: Sequence[int], k: int) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(k)]
    for idx, m in enumerate(masks):
        for p in _bits(m):
            out[p].append(idx)
    return out


class _CoverTable:
    """Memoised exact cover values keyed by the already-covered packet mask.

    ``value(cov)`` is (fewest sets covering the rest, largest total weight
    among covers of that size). Each step branches on one uncovered packet
    (the one held by fewest sets), which reaches every smallest cover, so
    there are at most 2**K states.
    """

    def __init__(self, masks: Sequence[int], weights: Sequence[int], k: int):
        self.masks = masks
        self.weights = weights
        self.full = (1 << k) - 1
        self.containing = _containing(masks, k)
        if any(not c for c in self.containing):
            raise ValueError("encoding sets do not cover every packet")
        self.order = sorted(range(k), key=lambda p: (len(self.containing[p]), p))
        self.memo: dict[int, tuple[int, int]] = {self.full: (0, 0)}

    def value(self, cov: int) -> tuple[int, int]:
        v = self.memo.get(cov)
        if v is not None:
            return v
        p = next(p for p in self.order if not cov >> p & 1)
        best_n, best_w = 1 << 30, -1
        for i in self.containing[p]:
            n, w = self.value(cov | self.masks[i])
            n, w = n + 1, w + self.weights[i]
            if n < best_n or (n == best_n and w > best_w):
                best_n, best_w = n, w
        self.memo[cov] = (best_n, best_w)
        return best_n, best_w


def _first_best_cover(table: _CoverTable) -> tuple[int, ...]:
    """Lexicographically smallest sorted index tuple among the best covers in ``table``."""
    masks, weights, full = table.masks, table.weights, table.full
    n = len(masks)
    u, target = table.value(0)
    last_holder = [max(c) for c in table.containing]
    failed: set[tuple[int, int, int]] = set()

    def dfs(start: int, chosen: tuple[int, ...], cov: int, weight: int):
        r = u - len(chosen)
        if cov == full:
            return chosen if r == 0 and weight == target else None
        # any completion needs >= need sets (else a smaller cover exists), and must hit the target
        need, best = table.value(cov)
        if need != r or weight + best != target:
            return None
        key = (start, cov, weight)
        if key in failed:
            return None
        limit = min(last_holder[p] for p in _bits(full & ~cov))
        for i in range(start, min(limit, n - r) + 1):
            if masks[i] & ~cov:  # a set adding nothing cannot sit in a smallest cover
                got = dfs(i + 1, chosen + (i,), cov | masks[i], weight + weights[i])
                if got is not None:
                    return got
        failed.add(key)
        return None

    top = dfs(0, (), 0, 0)
    assert top is not None
    return top


def best_minimal_collection(sets: Sequence[EncodingSet], k: int, t_sizes: Sequence[int]) -> Collection:
    """The minimal collection ``select_and_order`` would pick, without listing them all.

    Sigma is additive over sets (a set contributes the target counts of its
    packets), so this is a max-weight cover of the smallest feasible size.
    ``sets`` must be in canonical order so that index-tuple order matches
    signature order for the tie-break.
    """
    if k == 0:
        return Collection((), 0, sigma=0)
    weights = [sum(t_sizes[p] for p in s.packets) for s in sets]
    table = _CoverTable([s.mask for s in sets], weights, k)
    top = _first_best_cover(table)
    return Collection(tuple(sets[i] for i in top), k, sigma=table.value(0)[1])


@dataclass(frozen=True)
class Solution:
    """Everything the analysis and simulator need from one solve."""

    collection: Collection          # selected and ordered
    u_idnc: int                     # len(collection); exact unless ``suboptimal``
    n_maximal_sets: int

    @property
    def suboptimal(self) -> bool:
        return self.collection.suboptimal


def solve(c: ConflictMatrix, demands: DemandSets, mode: str = "exact", reorder: bool = True) -> Solution:
    """Maximal sets, then the sigma-best minimal collection (or a greedy cover), ordered.

    ``mode="enumerate"`` lists every minimal collection first and then selects;
    it gives the same answer as ``"exact"`` but can be far slower.
    """
    k = c.n_packets
    if mode not in ("exact", "enumerate", "greedy"):
        raise ValueError(f"unknown solver mode {mode!r}")
    if k == 0:
        return Solution(Collection((), 0, sigma=0), 0, 0)
    t = demands.t_sizes
    sets = maximal_encoding_sets(c)
    if mode == "greedy" or k > EXACT_MAX_PACKETS or len(sets) > EXACT_MAX_SETS:
        g = greedy_collection(sets, k)
        chosen = select_and_order([Collection(g.sets, k, suboptimal=True)], demands, reorder=reorder)
        return Solution(chosen, len(chosen), len(sets))
    if mode == "enumerate":
        cols = minimal_collections(sets, k)
    else:
        cols = [best_minimal_collection(sets, k, t)]
    chosen = select_and_order(cols, demands, reorder=reorder)
    return Solution(chosen, len(chosen), len(sets))


def u_idnc(c: ConflictMatrix) -> int:
    """Minimum collection size (exact)."""
    k = c.n_packets
    if k == 0:
        return 0
    masks = maximal_set_masks(c)
    return _CoverTable(masks, [0] * len(masks), k).value(0)[0]


def _check_m0(k: int, m0: int):
    if k < 1:
        raise ValueError("k must be positive")
    if not 0 <= m0 <= k * (k - 1) // 2:
        raise ValueError(f"m0={m0} outside [0, {k * (k - 1) // 2}] for k={k}")


def u_upper_bound(k: int, m0: int) -> int:
    """Staircase upper bound: zeros spent one packet at a time (K-1, then K-2, ...)."""
    _check_m0(k, m0)
    if m0 == 0:
        return k
    spent = 0
    for j in range(1, k):
        spent += k - j
        if m0 <= spent:
            return k - j
    return 1


def lower_bound_transitions(k: int) -> list[tuple[int, int]]:
    """(zeros needed, resulting bound) for each merge of the two smallest sets."""
    if k < 1:
        raise ValueError("k must be positive")
    heap = [1] * k
    cost = 0
    out = []
    while len(heap) > 1:
        a = heapq.heappop(heap)
        b = heapq.heappop(heap)
        cost += a * b
        heapq.heappush(heap, a + b)
        out.append((cost, len(heap)))
    return out


def u_lower_bound(k: int, m0: int) -> int:
    """Fewest sets reachable when every zero is spent merging the two smallest sets."""
    _check_m0(k, m0)
    bound = k
    for cost, remaining in lower_bound_transitions(k):
        if cost > m0:
            break
        bound = remaining
    return bound


def geller_bound(k: int, m0: int) -> int:
    _check_m0(k, m0)
    return -(-k * k // (k + 2 * m0))


def chromatic_oracle(c: ConflictMatrix, cap: int = ORACLE_MAX_PACKETS) -> int:
    """Chromatic number of the conflict graph by plain backtracking over colour counts."""
    k = c.n_packets
    if k > cap:
        raise ValueError(f"K={k} exceeds the oracle cap of {cap}")
    if k == 0:
        return 0
    nbrs = [[j for j in range(k) if j != i and c.conflict(i, j)] for i in range(k)]
    order = sorted(range(k), key=lambda v: -len(nbrs[v]))

    def colourable(ncol: int) -> bool:
        colour = [-1] * k

        def place(pos: int) -> bool:
            if pos == k:
                return True
            v = order[pos]
            used = {colour[u] for u in nbrs[v]}
            # only open one new colour at a time (symmetry breaking)
            top = max(colour) + 1
            for col in range(min(ncol, top + 1)):
                if col not in used:
                    colour[v] = col
                    if place(pos + 1):
                        return True
                    colour[v] = -1
            return False

        return place(0)

    for ncol in range(1, k + 1):
        if colourable(ncol):
            return ncol
    return k
