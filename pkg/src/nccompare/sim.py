"""Monte Carlo transmission of the coded phase over memoryless erasure links."""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .feedback import StateFeedbackMatrix, conflict_matrix, derive_demands
from .solver import Collection, solve, u_idnc


class ScheduleExhausted(RuntimeError):
    """A fixed erasure pattern ran out of slots before every demand was met."""


class RandomErasures:
    """Each receiver independently loses each slot with probability ``pe``."""

    def __init__(self, pe: float, rng: np.random.Generator):
        if not 0.0 <= pe < 1.0:
            raise ValueError(f"erasure probability must be in [0, 1), got {pe}")
        self.pe = pe
        self.rng = rng

    def draw(self, n_receivers: int) -> np.ndarray:
        return self.rng.random(n_receivers) < self.pe


class FixedErasures:
    """Replays ``pattern[n, slot]`` (True = erased), one column per coded slot."""

    def __init__(self, pattern):
        p = np.asarray(pattern, dtype=bool)
        if p.ndim != 2:
            raise ValueError("erasure pattern must be receivers x slots")
        self.pattern = p
        self.next_slot = 0

    def draw(self, n_receivers: int) -> np.ndarray:
        if n_receivers != self.pattern.shape[0]:
            raise ValueError(f"pattern has {self.pattern.shape[0]} receivers, run has {n_receivers}")
        if self.next_slot >= self.pattern.shape[1]:
            raise ScheduleExhausted(f"erasure pattern has only {self.pattern.shape[1]} slots")
        col = self.pattern[:, self.next_slot]
        self.next_slot += 1
        return col.copy()


def as_channel(erasures, rng: np.random.Generator | None = None):
    """Accept a probability (needs ``rng``), a pattern array, or a ready channel."""
    if isinstance(erasures, (RandomErasures, FixedErasures)):
        return erasures
    if isinstance(erasures, (int, float)):
        if rng is None:
            raise ValueError("a random channel needs an rng")
        return RandomErasures(float(erasures), rng)
    return FixedErasures(erasures)


@dataclass(frozen=True)
class SlotRecord:
    packets: tuple[int, ...] | None      # packet ids XOR-ed together; None for an RLNC combination
    erased: tuple[bool, ...]
    decoded: tuple[tuple[int, ...], ...]  # per receiver, packet ids decoded in this slot


@dataclass
class TransmissionTrace:
    scheme: str
    n_receivers: int
    slots: list[SlotRecord] = field(default_factory=list)
    round_sizes: list[int] = field(default_factory=list)
    decode_slot: dict[tuple[int, int], int] = field(default_factory=dict)  # (receiver, packet id) -> slot
    suboptimal: bool = False

    @property
    def total_slots(self) -> int:
        return len(self.slots)

    @property
    def rounds(self) -> list[tuple[int, int]]:
        """1-based inclusive slot ranges of each feedback round."""
        out, start = [], 1
        for size in self.round_sizes:
            out.append((start, start + size - 1))
            start += size
        return out

    @property
    def first_round(self) -> int:
        return self.round_sizes[0] if self.round_sizes else 0

    @property
    def extra_slots(self) -> int:
        """Slots in the second round (the V instance of the first round)."""
        return self.round_sizes[1] if len(self.round_sizes) > 1 else 0

    def average_delay(self, within_first_round: bool = False) -> float:
        slots = list(self.decode_slot.values())
        if within_first_round:
            slots = [s for s in slots if s <= self.first_round]
        if not slots:
            raise ValueError("nothing decoded")
        return float(np.mean(slots))

    def decoded_per_slot(self) -> list[int]:
        return [sum(len(d) for d in rec.decoded) for rec in self.slots]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "n_receivers": self.n_receivers,
            "total_slots": self.total_slots,
            "round_sizes": list(self.round_sizes),
            "rounds": [list(r) for r in self.rounds],
            "suboptimal": self.suboptimal,
            "slots": [
                {"slot": i + 1,
                 "packets": None if r.packets is None else list(r.packets),
                 "erased": [n + 1 for n, e in enumerate(r.erased) if e],
                 "decoded": {str(n + 1): list(d) for n, d in enumerate(r.decoded) if d}}
                for i, r in enumerate(self.slots)
            ],
            "decode_slot": [
                {"receiver": n + 1, "packet": k, "slot": s}
                for (n, k), s in sorted(self.decode_slot.items())
            ],
        }


def _run_idnc(sfm: StateFeedbackMatrix, channel, solver: str, per_slot: bool, scheme: str) -> TransmissionTrace:
    if sfm.is_empty:
        raise ValueError("nothing to transmit")
    ids = sfm.packet_ids
    col_of = {pid: j for j, pid in enumerate(ids)}
    state = sfm.entries.astype(bool).copy()
    n = sfm.n_receivers
    trace = TransmissionTrace(scheme, n)
    while state.any():
        current = StateFeedbackMatrix.from_rows(state.astype(np.uint8), ids)
        sol = solve(conflict_matrix(current), derive_demands(current), solver)
        trace.suboptimal |= sol.suboptimal
        sets = sol.collection.sets[:1] if per_slot else sol.collection.sets
        for s in sets:
            pids = tuple(current.packet_ids[p] for p in s.packets)
            cols = [col_of[pid] for pid in pids]
            erased = channel.draw(n)
            wanted = state[:, cols]
            hits = wanted.sum(axis=1)
            if (hits > 1).any():
                raise AssertionError("encoding set is not instantly decodable")  # pragma: no cover
            decoded = []
            slot = trace.total_slots + 1
            for r in range(n):
                if hits[r] == 1 and not erased[r]:
                    j = cols[int(np.flatnonzero(wanted[r])[0])]
                    state[r, j] = False
                    trace.decode_slot[(r, ids[j])] = slot
                    decoded.append((ids[j],))
                else:
                    decoded.append(())
            trace.slots.append(SlotRecord(pids, tuple(bool(e) for e in erased), tuple(decoded)))
        trace.round_sizes.append(len(sets))
    return trace


def run_semi_online_idnc(sfm: StateFeedbackMatrix, erasures, rng: np.random.Generator | None = None,
                         solver: str = "exact") -> TransmissionTrace:
    """Send a whole ordered minimal collection, then re-solve on the feedback; repeat."""
    return _run_idnc(sfm, as_channel(erasures, rng), solver, per_slot=False, scheme="IDNC-semi-online")


def run_fully_online_idnc(sfm: StateFeedbackMatrix, erasures, rng: np.random.Generator | None = None,
                          solver: str = "exact") -> TransmissionTrace:
    """Re-solve after every slot and send only the first set of the new collection."""
    return _run_idnc(sfm, as_channel(erasures, rng), solver, per_slot=True, scheme="IDNC-fully-online")


def run_rlnc(sfm: StateFeedbackMatrix, erasures, rng: np.random.Generator | None = None) -> TransmissionTrace:
    """Rounds of random combinations; round 1 is W_max slots, later rounds cover the largest deficit."""
    if sfm.is_empty:
        raise ValueError("nothing to transmit")
    channel = as_channel(erasures, rng)
    ids = sfm.packet_ids
    n = sfm.n_receivers
    need = sfm.entries.sum(axis=1).astype(np.int64)
    got = np.zeros(n, dtype=np.int64)
    done = need == 0
    trace = TransmissionTrace("RLNC", n)
    size = int(need.max())
    while size > 0:
        for _ in range(size):
            erased = channel.draw(n)
            slot = trace.total_slots + 1
            got += (~erased) & ~done
            decoded = []
            for r in range(n):
                if not done[r] and got[r] >= need[r]:
                    done[r] = True
                    pk = tuple(ids[j] for j in np.flatnonzero(sfm.entries[r]))
                    for pid in pk:
                        trace.decode_slot[(r, pid)] = slot
                    decoded.append(pk)
                else:
                    decoded.append(())
            trace.slots.append(SlotRecord(None, tuple(bool(e) for e in erased), tuple(decoded)))
        trace.round_sizes.append(size)
        size = int(np.max(np.where(done, 0, need - got)))
    return trace


# -- fast first-round samplers used for pmf validation -------------------------------------


def round_one_residuals(sfm: StateFeedbackMatrix, collection: Collection, erased: np.ndarray) -> np.ndarray:
    """Demand matrices left after sending ``collection`` once.

    ``erased`` has shape (trials, N, U); the result has shape (trials, N, K).
    """
    k, u = sfm.n_packets, len(collection)
    member = np.zeros((k, u), dtype=bool)
    for i, s in enumerate(collection.sets):
        member[list(s.packets), i] = True
    heard = (~erased).astype(np.int32) @ member.T.astype(np.int32) > 0
    return sfm.entries.astype(bool)[None, :, :] & ~heard


@functools.lru_cache(maxsize=65536)
def _u_of_residual(key: bytes, n: int, k: int) -> int:
    a = np.frombuffer(key, dtype=bool).reshape(n, k)
    residual = StateFeedbackMatrix.from_rows(a.astype(np.uint8))
    return u_idnc(conflict_matrix(residual))


def sample_v_idnc(sfm: StateFeedbackMatrix, collection: Collection, pe: float,
                  rng: np.random.Generator, trials: int) -> np.ndarray:
    """Extra slots needed after one semi-online round, for ``trials`` independent channels:
    the exact minimum collection size of each residual demand matrix."""
    n, u = sfm.n_receivers, len(collection)
    erased = rng.random((trials, n, u)) < pe
    res = round_one_residuals(sfm, collection, erased)
    k = sfm.n_packets
    return np.array([_u_of_residual(np.ascontiguousarray(r).tobytes(), n, k) for r in res], dtype=np.int64)


def sample_v_rlnc(sfm: StateFeedbackMatrix, pe: float, rng: np.random.Generator, trials: int) -> np.ndarray:
    """Largest remaining deficit after W_max RLNC slots, per trial."""
    need = sfm.entries.sum(axis=1).astype(np.int64)
    w_max = int(need.max())
    erased = rng.random((trials, sfm.n_receivers, w_max)) < pe
    got = (~erased).sum(axis=2)
    return np.maximum(need[None, :] - got, 0).max(axis=1)


# -- seeded trial fan-out ------------------------------------------------------------------


def trial_rng(master_seed: int, *index: int) -> np.random.Generator:
    """Independent stream for trial ``index``: SeedSequence(master_seed, spawn_key=index)."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(index)))


def _run_chunk(fn: Callable, master_seed: int, stream: tuple[int, ...], indices: Sequence[int]) -> list:
    return [fn(i, trial_rng(master_seed, *stream, i)) for i in indices]


def run_trials(fn: Callable[[int, np.random.Generator], object], n_trials: int, master_seed: int,
               workers: int = 1, stream: tuple[int, ...] = (), chunk_size: int = 256) -> list:
    """Call ``fn(i, rng_i)`` for i in range(n_trials); results come back in trial order.

    Trial i draws from ``trial_rng(master_seed, *stream, i)``, so the output
    does not depend on ``workers``. ``fn`` must be picklable when ``workers > 1``.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    chunks = [range(s, min(s + chunk_size, n_trials)) for s in range(0, n_trials, chunk_size)]
    if workers <= 1:
        out = []
        for c in chunks:
            out.extend(_run_chunk(fn, master_seed, stream, c))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(functools.partial(_run_chunk, fn, master_seed, stream), chunks)
        return [x for part in parts for x in part]
