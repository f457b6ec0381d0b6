"""Closed-form RLNC metrics under the large-field assumption.

Every non-erased coded packet is innovative until a receiver holds as many as
it wants, at which point it decodes everything at once.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .distribution import Distribution
from .feedback import DemandSets


def w_max_cdf(kt: int, pe: float, n: int, w: int) -> float:
    """P(W_max <= w) for N receivers each losing Binomial(kt, pe) packets.

    The inner sum starts at i = 0; without the zero-loss term the expression
    does not reach 1 at w = kt.
    """
    if not 0 <= w <= kt:
        raise ValueError(f"w={w} outside [0, {kt}]")
    single = sum(comb(kt, i) * pe ** i * (1 - pe) ** (kt - i) for i in range(w + 1))
    return min(single, 1.0) ** n


def expected_u_rlnc(kt: int, pe: float, n: int) -> float:
    """Mean of the largest of N i.i.d. Binomial(kt, pe) loss counts."""
    cdf = [w_max_cdf(kt, pe, n, w) for w in range(kt + 1)]
    return sum(w * (cdf[w] - cdf[w - 1]) for w in range(1, kt + 1))


def receiver_v_pmf(w_n: int, w_max: int, pe: float) -> np.ndarray:
    """pmf of one receiver's shortfall after W_max coded slots (index = shortfall)."""
    q = 1 - pe
    out = np.zeros(w_n + 1)
    out[0] = sum(comb(w_max, w) * pe ** (w_max - w) * q ** w for w in range(w_n, w_max + 1))
    for v in range(1, w_n + 1):
        got = w_n - v
        out[v] = comb(w_max, got) * pe ** (w_max - got) * q ** got
    return out


def system_cdf(per_receiver: list[np.ndarray], upto: int) -> np.ndarray:
    """P(max_n V_n <= v) for v = 0..upto from independent per-receiver pmfs."""
    cdf = np.ones(upto + 1)
    for pmf in per_receiver:
        c = np.cumsum(pmf)
        padded = np.ones(upto + 1)
        m = min(len(c), upto + 1)
        padded[:m] = c[:m]
        cdf *= padded
    return cdf


def v_rlnc_pdf(demands: DemandSets, pe: float) -> Distribution:
    """Exact pmf of the extra slots needed after a first round of W_max RLNC slots."""
    w_max = demands.w_max
    if w_max < 1:
        raise ValueError("no receiver wants anything")
    per = [receiver_v_pmf(w, w_max, pe) for w in demands.w_sizes]
    return Distribution.from_cdf(system_cdf(per, w_max), 0, exact=True)


def rlnc_expected_decoded(demands: DemandSets, pe: float, u: int) -> float:
    """Mean number of algorithmic packets decoded exactly at coded slot ``u``."""
    if not 1 <= u <= demands.w_max:
        raise ValueError(f"slot {u} outside [1, {demands.w_max}]")
    total = 0.0
    for w in demands.w_sizes:
        if 1 <= w <= u:
            total += w * comb(u - 1, w - 1) * pe ** (u - w) * (1 - pe) ** w
    return total


def shifted_h_pdf(u_min: int, v_pdf: Distribution) -> Distribution:
    """pmf of U + V when the first round is fixed at ``u_min`` slots."""
    if u_min < 0:
        raise ValueError("u_min must be non-negative")
    return Distribution(v_pdf.pmf, v_pdf.support_min + u_min, v_pdf.exact)
