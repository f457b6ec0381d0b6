"""Analytical IDNC metrics for one ordered minimal collection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distribution import Distribution, poisson_binomial
from .feedback import DemandSets, StateFeedbackMatrix, derive_demands
from .rlnc import rlnc_expected_decoded, system_cdf
from .solver import Collection


@dataclass(frozen=True)
class DiversityProfile:
    """``d_at[k, u]`` counts the sets among the first ``u`` that contain packet k."""

    d_at: np.ndarray

    @classmethod
    def of(cls, collection: Collection) -> DiversityProfile:
        k, u = collection.n_packets, len(collection)
        d_at = np.zeros((k, u + 1), dtype=np.int64)
        for i, s in enumerate(collection.sets, start=1):
            d_at[:, i] = d_at[:, i - 1]
            for p in s.packets:
                d_at[p, i] += 1
        d_at.setflags(write=False)
        return cls(d_at)

    @property
    def d(self) -> np.ndarray:
        return self.d_at[:, -1]

    @property
    def n_slots(self) -> int:
        return self.d_at.shape[1] - 1


def v_n_pdf(wants: Iterable[int], profile: DiversityProfile, pe: float) -> Distribution:
    """Shortfall of one receiver after the round: each wanted packet is still missing
    independently with probability pe ** diversity, so the count is Poisson-binomial."""
    wants = sorted(wants)
    if not wants:
        raise ValueError("receiver wants nothing")
    d = profile.d
    if (d[wants] < 1).any():
        raise ValueError("collection misses a wanted packet")
    return Distribution(tuple(poisson_binomial([pe ** int(d[k]) for k in wants])), 0, exact=True)


def v_idnc_pdf(sfm: StateFeedbackMatrix, collection: Collection, pe: float) -> Distribution:
    """Approximate pmf of extra slots: product of per-receiver shortfall CDFs.

    Only the values 0 and 1 follow directly; beyond that the product is an
    upper bound on the CDF, so the result is flagged inexact.
    """
    demands = derive_demands(sfm)
    profile = DiversityProfile.of(collection)
    if not collection.covers_all:
        raise ValueError("collection does not cover every wanted packet")
    per = [v_n_pdf(w, profile, pe).pmf for w in demands.wants if w]
    u = len(collection)
    return Distribution.from_cdf(system_cdf([np.asarray(p) for p in per], u), 0, exact=False)


def idnc_expected_decoded(demands: DemandSets, collection: Collection, pe: float, u: int) -> float:
    """Mean algorithmic packets decoded at slot ``u``: a target decodes packet k there if it
    missed the earlier transmissions of k and catches this one."""
    if not 1 <= u <= len(collection):
        raise ValueError(f"slot {u} outside [1, {len(collection)}]")
    t = demands.t_sizes
    total = 0.0
    for k in collection.sets[u - 1].packets:
        seen = collection.cumulative_diversity(k, u)
        total += t[k] * pe ** (seen - 1) * (1 - pe)
    return total


def expected_delay(expected_decoded: Sequence[float]) -> float:
    """Decode-count-weighted mean slot index (slots are numbered from 1)."""
    e = np.asarray(expected_decoded, dtype=float)
    tot = e.sum()
    if tot <= 0:
        raise ValueError("no decodings expected; delay undefined")
    return float(np.dot(np.arange(1, e.size + 1), e) / tot)


@dataclass(frozen=True)
class DelayReport:
    scheme: str
    expected_decoded: tuple[float, ...]
    expected_delay: float
    t_total: int

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "expected_decoded": list(self.expected_decoded),
                "expected_delay": self.expected_delay, "t_total": self.t_total}


def idnc_delay_report(demands: DemandSets, collection: Collection, pe: float) -> DelayReport:
    ed = tuple(idnc_expected_decoded(demands, collection, pe, u) for u in range(1, len(collection) + 1))
    return DelayReport("IDNC", ed, expected_delay(ed), demands.t_total)


def rlnc_delay_report(demands: DemandSets, pe: float) -> DelayReport:
    ed = tuple(rlnc_expected_decoded(demands, pe, u) for u in range(1, demands.w_max + 1))
    return DelayReport("RLNC", ed, expected_delay(ed), demands.t_total)
