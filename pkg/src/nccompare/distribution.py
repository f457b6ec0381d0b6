"""Finite integer-support probability mass functions, plus the empirical/MSE helpers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-9


@dataclass(frozen=True)
class Distribution:
    """pmf[i] is the probability of value ``support_min + i``.

    ``exact`` is False when the masses come from an approximation rather than
    an exact derivation.
    """

    pmf: tuple[float, ...]
    support_min: int = 0
    exact: bool = True

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("pmf must be a non-empty 1-D sequence")
        # differences of products can dip a hair below zero
        p[(p < 0) & (p > -1e-12)] = 0.0
        if (p < 0).any() or (p > 1 + 1e-12).any():
            raise ValueError("pmf masses must lie in [0, 1]")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"pmf sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "pmf", tuple(float(x) for x in p))

    @classmethod
    def from_cdf(cls, cdf: Sequence[float], support_min: int = 0, exact: bool = True) -> Distribution:
        c = np.asarray(cdf, dtype=float)
        return cls(tuple(np.diff(c, prepend=0.0)), support_min, exact)

    @classmethod
    def point(cls, value: int, exact: bool = True) -> Distribution:
        return cls((1.0,), value, exact)

    @property
    def support(self) -> range:
        return range(self.support_min, self.support_min + len(self.pmf))

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.pmf) - 1

    def prob(self, value: int) -> float:
        i = value - self.support_min
        return self.pmf[i] if 0 <= i < len(self.pmf) else 0.0

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.support_min, self.support_max + 1), self.pmf))

    def dense(self, upto: int) -> np.ndarray:
        """Masses on 0..upto (zero-padded), for comparisons and averaging."""
        if self.support_min < 0:
            raise ValueError("dense() needs a non-negative support")
        out = np.zeros(max(upto, self.support_max) + 1)
        out[self.support_min:self.support_max + 1] = self.pmf
        return out

    def to_dict(self) -> dict:
        return {"support_min": self.support_min, "pmf": list(self.pmf), "exact": self.exact}

    @classmethod
    def from_dict(cls, d: dict) -> Distribution:
        return cls(tuple(d["pmf"]), int(d.get("support_min", 0)), bool(d.get("exact", True)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "probability"])
        for v, p in zip(self.support, self.pmf):
            w.writerow([v, repr(p)])
        return buf.getvalue()


def empirical_pdf(values: Iterable[int]) -> Distribution:
    """Normalised histogram over 0..max(values)."""
    v = np.asarray(list(values), dtype=np.int64)
    if v.size == 0:
        raise ValueError("need at least one sample")
    if (v < 0).any():
        raise ValueError("samples must be non-negative integers")
    counts = np.bincount(v)
    return Distribution(tuple(counts / v.size), 0, exact=False)


def pdf_mse(a: Distribution, b: Distribution) -> float:
    """Mean squared difference over the union of both supports (shorter one zero-padded)."""
    lo = min(a.support_min, b.support_min)
    hi = max(a.support_max, b.support_max)
    xs = range(lo, hi + 1)
    diff = np.array([a.prob(x) - b.prob(x) for x in xs])
    return float(np.mean(diff ** 2))


def poisson_binomial(probs: Sequence[float]) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(p_i), by repeated convolution."""
    pmf = np.array([1.0])
    for p in probs:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return pmf


def average(dists: Sequence[Distribution], exact: bool | None = None) -> Distribution:
    """Equal-weight mixture, aligned on value."""
    if not dists:
        raise ValueError("nothing to average")
    hi = max(d.support_max for d in dists)
    acc = np.zeros(hi + 1)
    for d in dists:
        acc += d.dense(hi)
    acc /= len(dists)
    lo = int(np.flatnonzero(acc)[0]) if acc.any() else 0
    flag = all(d.exact for d in dists) if exact is None else exact
    return Distribution(tuple(acc[lo:]), lo, flag)
