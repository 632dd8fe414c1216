"""Random-failure analysis: when do unions of failed graphs stay connected.

A link that is up with probability 1 - p_fail each step is missing from the
union of T + 1 consecutive steps with probability p_fail**(T+1).  Comparing
that effective failure rate against a percolation threshold of the base
topology predicts how long an averaging window must be before connectivity
is restored in expectation; the Monte-Carlo routine measures it directly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .graph import WeightedGraph

__all__ = [
    "PercolationProfile",
    "McConnectivity",
    "er_threshold",
    "effective_failure",
    "min_window",
    "mc_union_connectivity",
]


@dataclass(frozen=True)
class PercolationProfile:
    """Degree-based percolation threshold of an Erdos-Renyi ensemble.

    ``threshold`` is p_c = 1 - 1/mean_degree, the failure rate above which
    the thinned graph fragments in expectation; None when the mean degree
    does not exceed 1 (the ensemble is already subcritical, see ``warning``).
    """

    n: int
    link_probability: float
    mean_degree: float
    threshold: float | None
    convention: str
    warning: str | None = None


@dataclass(frozen=True)
class McConnectivity:
    """Monte-Carlo estimate of union connectivity with a Wilson 95% interval."""

    fraction: float
    wilson_low: float
    wilson_high: float
    trials: int
    successes: int


def er_threshold(n: int, p: float, convention: str = "half") -> PercolationProfile:
    """Percolation threshold 1 - 1/mean_degree for an ER(n, p) ensemble.

    convention "half" attributes each link to one endpoint, giving
    mean_degree = (n - 1) * p / 2; convention "standard" counts both
    endpoints, giving (n - 1) * p.  The halved form is the default used by
    the rest of the package.  When mean_degree <= 1 the threshold is
    undefined and the profile carries a warning instead.
    """
    if n < 2:
        raise ConfigurationError(f"er_threshold needs n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"link probability must be in (0, 1], got {p}")
    if convention == "half":
        mean_degree = (n - 1) * p / 2.0
    elif convention == "standard":
        mean_degree = (n - 1) * float(p)
    else:
        raise ConfigurationError(f"unknown degree convention {convention!r}")
    if mean_degree <= 1.0:
        return PercolationProfile(
            n, p, mean_degree, None, convention,
            warning="mean degree <= 1: the ensemble percolates for no failure rate",
        )
    return PercolationProfile(n, p, mean_degree, 1.0 - 1.0 / mean_degree, convention)


def effective_failure(p_fail: float, window: int) -> float:
    """Probability p_fail**(window + 1) that a link misses a whole window."""
    if not 0.0 <= p_fail <= 1.0:
        raise ConfigurationError(f"failure rate must be in [0, 1], got {p_fail}")
    if window < 0 or int(window) != window:
        raise ConfigurationError(f"window must be a nonnegative integer, got {window}")
    return float(p_fail) ** (int(window) + 1)


def min_window(p_fail: float, threshold: float) -> int:
    """Smallest T >= 0 with p_fail**(T+1) < threshold.

    This is the shortest union window whose effective failure rate drops
    below the percolation threshold; it is 0 whenever p_fail < threshold
    already.  Requires 0 <= p_fail < 1 and 0 < threshold < 1.
    """
    if not 0.0 <= p_fail < 1.0:
        raise DomainError(f"min_window needs 0 <= p_fail < 1, got {p_fail}")
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"min_window needs 0 < threshold < 1, got {threshold}")
    t = 0
    while effective_failure(p_fail, t) >= threshold:
        t += 1
        if t > 10**6:
            raise DomainError("window scan exceeded 1e6 steps")
    return t


def _union_connected(
    edge_i: np.ndarray, edge_j: np.ndarray, keep: np.ndarray, n: int
) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in zip(edge_i[keep].tolist(), edge_j[keep].tolist()):
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def mc_union_connectivity(
    base: WeightedGraph, p_fail: float, window: int, trials: int = 500, seed: int = 0
) -> McConnectivity:
    """Estimate the probability that a (window+1)-step union stays connected.

    Each trial draws window + 1 independent failure masks over the base
    graph's links (each link up with probability 1 - p_fail per step), takes
    the union of surviving links, and checks connectivity.  Trials use
    per-trial derived seeds, so the estimate does not depend on execution
    order.  The confidence interval is the 95% Wilson score interval.
    """
    if not 0.0 <= p_fail <= 1.0:
        raise ConfigurationError(f"failure rate must be in [0, 1], got {p_fail}")
    if window < 0 or int(window) != window:
        raise ConfigurationError(f"window must be a nonnegative integer, got {window}")
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    ei, ej, _ = base.edges()
    m = len(ei)
    successes = 0
    for t in range(trials):
        rng = np.random.default_rng([int(seed), 0xACC3, t])
        if m == 0:
            keep = np.zeros(0, dtype=bool)
        else:
            keep = (rng.random((int(window) + 1, m)) >= p_fail).any(axis=0)
        if _union_connected(ei, ej, keep, base.n):
            successes += 1
    frac = successes / trials
    z = 1.959963984540054  # two-sided 95% normal quantile
    denom = 1.0 + z * z / trials
    center = (frac + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(frac * (1.0 - frac) / trials + z * z / (4.0 * trials * trials))
    # The Wilson interval contains the point estimate by construction; the
    # clamps only strip floating-point residue at the 0 and 1 endpoints.
    return McConnectivity(
        fraction=frac,
        wilson_low=min(frac, max(0.0, center - half)),
        wilson_high=max(frac, min(1.0, center + half)),
        trials=trials,
        successes=successes,
    )
