"""Receiver state after the systematic phase: demand matrix, wants/targets, conflicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateFeedbackMatrix:
    """N x K binary demand matrix; ``entries[n, k] == 1`` means receiver n wants packet k.

    ``packet_ids`` maps each column back to the packet's 1-based id in the
    original block, so reports can keep referring to the same packet after
    columns nobody wants any more have been dropped.
    """

    entries: np.ndarray
    packet_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2:
            raise ValueError("entries must be a 2-D matrix")
        if a.shape[0] < 1:
            raise ValueError("need at least one receiver")
        if a.size and not np.isin(a, (0, 1)).all():
            raise ValueError("entries must be 0/1")
        if a.shape[1] and not a.any(axis=0).all():
            raise ValueError("every packet column must be wanted by at least one receiver")
        ids = tuple(self.packet_ids) if self.packet_ids else tuple(range(1, a.shape[1] + 1))
        if len(ids) != a.shape[1]:
            raise ValueError("packet_ids length must equal the number of columns")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "packet_ids", ids)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]] | np.ndarray,
                  packet_ids: Iterable[int] | None = None) -> StateFeedbackMatrix:
        """Build from a raw matrix, dropping columns that no receiver wants."""
        a = np.asarray(rows, dtype=np.uint8)
        if a.ndim == 1 and a.size == 0:
            raise ValueError("need at least one receiver")
        ids = list(packet_ids) if packet_ids is not None else list(range(1, a.shape[1] + 1))
        keep = a.any(axis=0)
        return cls(a[:, keep], tuple(i for i, k in zip(ids, keep) if k))

    @property
    def n_receivers(self) -> int:
        return self.entries.shape[0]

    @property
    def n_packets(self) -> int:
        return self.entries.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.n_packets == 0

    def without(self, received: np.ndarray) -> StateFeedbackMatrix:
        """Residual matrix after clearing the (receiver, packet) pairs flagged in ``received``."""
        a = self.entries & ~np.asarray(received, dtype=bool)
        return StateFeedbackMatrix.from_rows(a.astype(np.uint8), self.packet_ids)

    def key(self) -> bytes:
        return self.entries.shape[1].to_bytes(2, "little") + self.entries.tobytes()

    def __eq__(self, other):
        if not isinstance(other, StateFeedbackMatrix):
            return NotImplemented
        return (self.packet_ids == other.packet_ids
                and self.entries.shape == other.entries.shape
                and bool((self.entries == other.entries).all()))

    def __hash__(self):
        return hash((self.packet_ids, self.key()))

    def __repr__(self):
        return f"StateFeedbackMatrix(N={self.n_receivers}, K={self.n_packets}, ids={self.packet_ids})"


@dataclass(frozen=True)
class DemandSets:
    wants: tuple[frozenset[int], ...]
    targets: tuple[frozenset[int], ...]

    @property
    def w_sizes(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.wants)

    @property
    def t_sizes(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.targets)

    @property
    def w_max(self) -> int:
        return max(self.w_sizes, default=0)

    @property
    def w_min(self) -> int:
        return min(self.w_sizes, default=0)

    @property
    def t_total(self) -> int:
        return sum(self.t_sizes)


def derive_demands(sfm: StateFeedbackMatrix) -> DemandSets:
    a = sfm.entries
    wants = tuple(frozenset(np.flatnonzero(row).tolist()) for row in a)
    targets = tuple(frozenset(np.flatnonzero(col).tolist()) for col in a.T)
    return DemandSets(wants, targets)


@dataclass(frozen=True, eq=False)
class ConflictMatrix:
    """Strict upper-triangular conflict flags over K packets.

    ``conflicts[i, j] == 1`` (i < j) when some receiver wants both packets.
    ``masks[i]`` is the same information as a bitmask of every packet that
    conflicts with packet i, which is what the solver works on.
    """

    conflicts: np.ndarray
    masks: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.conflicts, dtype=np.uint8)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("conflict matrix must be square")
        if np.tril(c).any():
            raise ValueError("conflict matrix must be strictly upper-triangular")
        object.__setattr__(self, "conflicts", _frozen(c))
        full = c | c.T
        masks = []
        for row in full:
            m = 0
            for j in np.flatnonzero(row).tolist():
                m |= 1 << j
            masks.append(m)
        object.__setattr__(self, "masks", tuple(masks))

    @classmethod
    def from_pairs(cls, k: int, conflicting: Iterable[tuple[int, int]]) -> ConflictMatrix:
        c = np.zeros((k, k), dtype=np.uint8)
        for i, j in conflicting:
            if i == j:
                raise ValueError("a packet cannot conflict with itself")
            i, j = min(i, j), max(i, j)
            c[i, j] = 1
        return cls(c)

    @classmethod
    def from_upper_rows(cls, rows: Sequence[Sequence[int]]) -> ConflictMatrix:
        """Parse the triangular layout used in the examples: row i lists c[i][i+1..K-1]."""
        k = len(rows) + 1
        c = np.zeros((k, k), dtype=np.uint8)
        for i, row in enumerate(rows):
            if len(row) != k - 1 - i:
                raise ValueError(f"row {i} should have {k - 1 - i} entries")
            c[i, i + 1:] = row
        return cls(c)

    @property
    def n_packets(self) -> int:
        return self.conflicts.shape[0]

    @property
    def m0(self) -> int:
        k = self.n_packets
        return k * (k - 1) // 2 - int(self.conflicts.sum())

    def conflict(self, i: int, j: int) -> bool:
        return bool(self.masks[i] >> j & 1)

    def restrict(self, keep: Sequence[int]) -> ConflictMatrix:
        """Conflict matrix of the sub-problem on packets ``keep`` (re-indexed in order)."""
        keep = sorted(keep)
        full = self.conflicts | self.conflicts.T
        return ConflictMatrix(np.triu(full[np.ix_(keep, keep)], 1))

    def __eq__(self, other):
        if not isinstance(other, ConflictMatrix):
            return NotImplemented
        return self.conflicts.shape == other.conflicts.shape and bool((self.conflicts == other.conflicts).all())

    def __hash__(self):
        return hash(self.conflicts.tobytes())


def conflict_matrix(sfm: StateFeedbackMatrix) -> ConflictMatrix:
    a = sfm.entries.astype(np.int32)
    co = a.T @ a
    return ConflictMatrix(np.triu(co > 0, 1).astype(np.uint8))


def generate_sfm(kt: int, n: int, pe: float, rng: np.random.Generator) -> StateFeedbackMatrix:
    """Random post-systematic state: each (receiver, packet) lost independently with prob ``pe``."""
    if kt < 1 or n < 1:
        raise ValueError("kt and n must be positive")
    if not 0.0 <= pe < 1.0:
        raise ValueError(f"erasure probability must be in [0, 1), got {pe}")
    lost = (rng.random((n, kt)) < pe).astype(np.uint8)
    return StateFeedbackMatrix.from_rows(lost)
