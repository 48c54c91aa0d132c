"""Hard-decision cooperative sensing: the K-out-of-N voting rule.

The reporting channel between sensors and the fusion center is ideal;
fused_probability is the exact binomial companion used to cross-check the
Monte Carlo voting path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detectors import LocalDecision


@dataclass(frozen=True)
class FusionRule:
    k: int
    n: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")


def fuse_hard(decisions: list[LocalDecision], rule: FusionRule) -> LocalDecision:
    """Vote: occupied iff at least k of the n local decisions say occupied.

    The fused statistic carries the vote count.
    """
    if len(decisions) != rule.n:
        raise ValueError(f"expected {rule.n} local decisions, got {len(decisions)}")
    votes = sum(d.occupied for d in decisions)
    return LocalDecision(occupied=votes >= rule.k, statistic=float(votes),
                         sensor_id="fusion")


def fused_probability(p_local: float, rule: FusionRule) -> float:
    """Exact binomial tail: P(at least k of n i.i.d. sensors vote occupied)."""
    if not 0.0 <= p_local <= 1.0:
        raise ValueError("p_local must be in [0, 1]")
    return sum(math.comb(rule.n, j) * p_local ** j * (1.0 - p_local) ** (rule.n - j)
               for j in range(rule.k, rule.n + 1))
