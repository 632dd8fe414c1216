"""Per-agent convex costs, box penalties, and the centralized optimum oracle.

Each agent holds one strictly convex scalar cost, optionally augmented with a
soft box penalty.  The oracle solves min sum_i f_i(x_i) subject to
sum_i x_i = total by bisection on the shared marginal-price multiplier: at
the optimum every unconstrained coordinate satisfies f_i'(x_i) = nu, and the
coordinate solutions are monotone in nu, so the aggregate is as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InfeasibilityError, NumericError

__all__ = [
    "BoxPenalty",
    "SmoothLogPenalty",
    "LocalCost",
    "CostSet",
    "SmoothnessEstimate",
    "CentralSolution",
    "quadratic_cost",
    "quartic_cost",
    "cost_value",
    "cost_grad",
    "cost_curvature",
    "aggregate_cost",
    "smoothness_bound",
    "central_solve",
    "load_costs_csv",
]


# --------------------------------------------------------------------------
# penalty terms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxPenalty:
    """Polynomial box penalty weight * (max(0, x-hi)^m + max(0, lo-x)^m).

    Zero inside [lo, hi]; the exponent m >= 2 keeps the gradient continuous
    at the boundary.  With m = 2 the curvature jumps to 2 * weight outside.
    """

    lo: float
    hi: float
    weight: float
    exponent: int = 2

    def __post_init__(self) -> None:
        if not (self.lo < self.hi):
            raise ConfigurationError(f"box penalty needs lo < hi, got [{self.lo}, {self.hi}]")
        if not (self.weight > 0.0):
            raise ConfigurationError(f"box penalty weight must be positive, got {self.weight}")
        if int(self.exponent) != self.exponent or self.exponent < 2:
            raise ConfigurationError(f"box penalty exponent must be an integer >= 2, got {self.exponent}")


@dataclass(frozen=True)
class SmoothLogPenalty:
    """Everywhere-smooth box penalty built from softplus barriers.

    value(x) = (softplus(mu*(x-hi)) + softplus(mu*(lo-x))) / mu, which decays
    exponentially inside the box and grows linearly with unit slope outside.
    Larger ``sharpness`` (mu) concentrates the transition at the boundary.
    """

    lo: float
    hi: float
    sharpness: float

    def __post_init__(self) -> None:
        if not (self.lo < self.hi):
            raise ConfigurationError(f"penalty needs lo < hi, got [{self.lo}, {self.hi}]")
        if not (self.sharpness > 0.0):
            raise ConfigurationError(f"penalty sharpness must be positive, got {self.sharpness}")


def _softplus(u):
    # max(u, 0) + log1p(exp(-|u|)) never overflows and loses no precision.
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def _sigmoid(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


# --------------------------------------------------------------------------
# local costs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalCost:
    """One agent's cost: a strictly convex base plus an optional penalty.

    kind "quadratic": p1*x^2 + p2*x + p3 with p1 > 0.
    kind "quartic":   p1*(x - p2)^4 with p1 > 0.
    """

    kind: str
    p1: float
    p2: float = 0.0
    p3: float = 0.0
    penalty: BoxPenalty | SmoothLogPenalty | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("quadratic", "quartic"):
            raise ConfigurationError(f"unknown cost kind {self.kind!r}")
        if not (self.p1 > 0.0 and math.isfinite(self.p1)):
            raise ConfigurationError(f"leading cost coefficient must be positive, got {self.p1}")


def quadratic_cost(
    a: float, b: float = 0.0, c: float = 0.0, penalty: BoxPenalty | SmoothLogPenalty | None = None
) -> LocalCost:
    """a*x^2 + b*x + c with a > 0."""
    return LocalCost("quadratic", a, b, c, penalty)


def quartic_cost(
    scale: float, target: float, penalty: BoxPenalty | SmoothLogPenalty | None = None
) -> LocalCost:
    """scale * (x - target)^4 with scale > 0; flat to second order at the target."""
    return LocalCost("quartic", scale, target, 0.0, penalty)


def _penalty_value(pen, x):
    if pen is None:
        return 0.0 * np.asarray(x, dtype=float)
    x = np.asarray(x, dtype=float)
    if isinstance(pen, BoxPenalty):
        up = np.maximum(0.0, x - pen.hi)
        dn = np.maximum(0.0, pen.lo - x)
        return pen.weight * (up**pen.exponent + dn**pen.exponent)
    mu = pen.sharpness
    return (_softplus(mu * (x - pen.hi)) + _softplus(mu * (pen.lo - x))) / mu


def _penalty_grad(pen, x):
    if pen is None:
        return 0.0 * np.asarray(x, dtype=float)
    x = np.asarray(x, dtype=float)
    if isinstance(pen, BoxPenalty):
        m = pen.exponent
        up = np.maximum(0.0, x - pen.hi)
        dn = np.maximum(0.0, pen.lo - x)
        return pen.weight * m * (up ** (m - 1) - dn ** (m - 1))
    mu = pen.sharpness
    return _sigmoid(mu * (x - pen.hi)) - _sigmoid(mu * (pen.lo - x))


def _penalty_curvature(pen, x):
    if pen is None:
        return 0.0 * np.asarray(x, dtype=float)
    x = np.asarray(x, dtype=float)
    if isinstance(pen, BoxPenalty):
        m = pen.exponent
        up = np.maximum(0.0, x - pen.hi)
        dn = np.maximum(0.0, pen.lo - x)
        if m == 2:
            return pen.weight * 2.0 * ((up > 0) | (dn > 0)).astype(float)
        return pen.weight * m * (m - 1) * (up ** (m - 2) + dn ** (m - 2))
    mu = pen.sharpness
    s1 = _sigmoid(mu * (x - pen.hi))
    s2 = _sigmoid(mu * (pen.lo - x))
    return mu * (s1 * (1.0 - s1) + s2 * (1.0 - s2))


def _base_value(c: LocalCost, x):
    x = np.asarray(x, dtype=float)
    if c.kind == "quadratic":
        return c.p1 * x**2 + c.p2 * x + c.p3
    return c.p1 * (x - c.p2) ** 4


def _base_grad(c: LocalCost, x):
    x = np.asarray(x, dtype=float)
    if c.kind == "quadratic":
        return 2.0 * c.p1 * x + c.p2
    return 4.0 * c.p1 * (x - c.p2) ** 3


def _base_curvature(c: LocalCost, x):
    x = np.asarray(x, dtype=float)
    if c.kind == "quadratic":
        return 2.0 * c.p1 + 0.0 * x
    return 12.0 * c.p1 * (x - c.p2) ** 2


def cost_value(c: LocalCost, x: float) -> float:
    """f_i(x) including the penalty term if one is attached."""
    return float(_base_value(c, x) + _penalty_value(c.penalty, x))


def cost_grad(c: LocalCost, x: float) -> float:
    """f_i'(x) including the penalty term; strictly increasing in x."""
    return float(_base_grad(c, x) + _penalty_grad(c.penalty, x))


def cost_curvature(c: LocalCost, x: float) -> float:
    """f_i''(x) including the penalty term (one-sided at box corners)."""
    return float(_base_curvature(c, x) + _penalty_curvature(c.penalty, x))


def aggregate_cost(costs: list[LocalCost], x: np.ndarray) -> float:
    """Sum of per-agent costs, accumulated with compensated summation."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(costs),):
        raise ConfigurationError(
            f"state length {x.shape} does not match {len(costs)} costs"
        )
    return math.fsum(cost_value(c, xi) for c, xi in zip(costs, x.tolist()))


# --------------------------------------------------------------------------
# vectorized view
# --------------------------------------------------------------------------


class CostSet:
    """Array-backed view of a cost list for per-step evaluation.

    Produces the same values as the scalar functions above, computed with
    one vector expression per call; the simulation loop uses this view.
    """

    def __init__(self, costs: list[LocalCost]):
        if not costs:
            raise ConfigurationError("CostSet needs at least one cost")
        self.costs = list(costs)
        n = len(costs)
        self.n = n
        self.quartic = np.array([c.kind == "quartic" for c in costs])
        self.p1 = np.array([c.p1 for c in costs])
        self.p2 = np.array([c.p2 for c in costs])
        self.p3 = np.array([c.p3 for c in costs])
        # penalty layout: 0 none, 1 box, 2 smooth-log; neutral rows use
        # parameters that make the corresponding branch evaluate to zero.
        kind = np.zeros(n, dtype=int)
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        wt = np.zeros(n)
        ex = np.full(n, 2, dtype=int)
        mu = np.ones(n)
        for idx, c in enumerate(costs):
            pen = c.penalty
            if pen is None:
                continue
            lo[idx], hi[idx] = pen.lo, pen.hi
            if isinstance(pen, BoxPenalty):
                kind[idx] = 1
                wt[idx] = pen.weight
                ex[idx] = pen.exponent
            else:
                kind[idx] = 2
                mu[idx] = pen.sharpness
        self.pen_kind = kind
        self.pen_lo = lo
        self.pen_hi = hi
        self.pen_weight = wt
        self.pen_exponent = ex
        self.pen_mu = mu
        self._box = kind == 1
        self._log = kind == 2
        # Homogeneous cost lists skip the two-branch select in the hot path.
        self._all_quadratic = not self.quartic.any()
        self._all_quartic = bool(self.quartic.all())

    # -- per-agent vector evaluations ------------------------------------

    def value_per_agent(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._all_quadratic:
            base = self.p1 * x**2 + self.p2 * x + self.p3
        elif self._all_quartic:
            base = self.p1 * (x - self.p2) ** 4
        else:
            base = np.where(
                self.quartic,
                self.p1 * (x - self.p2) ** 4,
                self.p1 * x**2 + self.p2 * x + self.p3,
            )
        out = base
        if self._box.any():
            up = np.maximum(0.0, x - self.pen_hi)
            dn = np.maximum(0.0, self.pen_lo - x)
            pv = self.pen_weight * (up**self.pen_exponent + dn**self.pen_exponent)
            out = out + np.where(self._box, pv, 0.0)
        if self._log.any():
            mu = self.pen_mu
            pv = (_softplus(mu * (x - self.pen_hi)) + _softplus(mu * (self.pen_lo - x))) / mu
            out = out + np.where(self._log, pv, 0.0)
        return out

    def total_value(self, x: np.ndarray) -> float:
        return math.fsum(self.value_per_agent(x).tolist())

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._all_quadratic:
            out = 2.0 * self.p1 * x + self.p2
        elif self._all_quartic:
            out = 4.0 * self.p1 * (x - self.p2) ** 3
        else:
            out = np.where(
                self.quartic,
                4.0 * self.p1 * (x - self.p2) ** 3,
                2.0 * self.p1 * x + self.p2,
            )
        if self._box.any():
            m = self.pen_exponent
            up = np.maximum(0.0, x - self.pen_hi)
            dn = np.maximum(0.0, self.pen_lo - x)
            pg = self.pen_weight * m * (up ** (m - 1) - dn ** (m - 1))
            out = out + np.where(self._box, pg, 0.0)
        if self._log.any():
            mu = self.pen_mu
            pg = _sigmoid(mu * (x - self.pen_hi)) - _sigmoid(mu * (self.pen_lo - x))
            out = out + np.where(self._log, pg, 0.0)
        return out

    def base_grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._all_quadratic:
            return 2.0 * self.p1 * x + self.p2
        if self._all_quartic:
            return 4.0 * self.p1 * (x - self.p2) ** 3
        return np.where(
            self.quartic,
            4.0 * self.p1 * (x - self.p2) ** 3,
            2.0 * self.p1 * x + self.p2,
        )

    def curvature(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.where(
            self.quartic,
            12.0 * self.p1 * (x - self.p2) ** 2,
            2.0 * self.p1 + 0.0 * x,
        )
        if self._box.any():
            m = self.pen_exponent
            up = np.maximum(0.0, x - self.pen_hi)
            dn = np.maximum(0.0, self.pen_lo - x)
            # Guard the m = 2 case: 0**0 is 1 under numpy, so gate each side
            # by whether it is actually outside the box.
            up_side = up ** np.maximum(m - 2, 0) * (up > 0)
            dn_side = dn ** np.maximum(m - 2, 0) * (dn > 0)
            pc = self.pen_weight * m * (m - 1) * (up_side + dn_side)
            out = out + np.where(self._box, pc, 0.0)
        if self._log.any():
            mu = self.pen_mu
            s1 = _sigmoid(mu * (x - self.pen_hi))
            s2 = _sigmoid(mu * (self.pen_lo - x))
            pc = mu * (s1 * (1.0 - s1) + s2 * (1.0 - s2))
            out = out + np.where(self._log, pc, 0.0)
        return out


# --------------------------------------------------------------------------
# smoothness estimate
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Half the largest observed curvature, padded by a 10% safety factor."""

    u: float
    max_curvature: float
    domain: tuple[float, float]
    grid_points: int


def smoothness_bound(
    costs: list[LocalCost], domain: tuple[float, float], grid_points: int = 512
) -> SmoothnessEstimate:
    """Estimate the quadratic-upper-bound constant u over a working interval.

    Scans f_i'' for every agent on a uniform grid over ``domain`` and returns
    u = 1.1 * max(f'') / 2.  The grid must be fine enough to see the penalty
    region, hence the minimum of 100 points.
    """
    lo, hi = domain
    if not (lo < hi and math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigurationError(f"smoothness domain must be a finite interval, got {domain}")
    if grid_points < 100:
        raise ConfigurationError(f"smoothness grid needs >= 100 points, got {grid_points}")
    xs = np.linspace(lo, hi, grid_points)
    cs = CostSet(costs)
    worst = 0.0
    for x in xs:
        worst = max(worst, float(cs.curvature(np.full(cs.n, x)).max()))
    return SmoothnessEstimate(
        u=0.55 * worst, max_curvature=worst, domain=(float(lo), float(hi)), grid_points=grid_points
    )


# --------------------------------------------------------------------------
# centralized oracle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CentralSolution:
    """Optimum of the equality-coupled problem found by the oracle."""

    x: np.ndarray
    multiplier: float
    value: float
    mode: str
    gap: float
    iterations: int


_MAX_EXPAND = 200
_INNER_ITERS = 110
_OUTER_ITERS = 320


def _coordinate_roots(cs: CostSet, nu: float, mode: str, lo_box, hi_box) -> np.ndarray:
    """Solve f_i'(x_i) = nu per agent by bracketed bisection (vectorized).

    In "penalized" mode the gradient includes penalty terms; in "exact_box"
    mode the base gradient is used and the result is clipped into the box.
    Bisection tolerates the quartic's vanishing curvature at its target,
    where Newton steps would stall.
    """
    grad = cs.grad if mode == "penalized" else cs.base_grad
    center = np.where(cs.quartic, cs.p2, -cs.p2 / (2.0 * cs.p1))
    lo = center - 1.0
    hi = center + 1.0
    span = 1.0
    for _ in range(_MAX_EXPAND):
        bad = grad(hi) < nu
        if not bad.any():
            break
        span *= 2.0
        hi = np.where(bad, center + span, hi)
    else:
        raise NumericError("bracket expansion failed on the upper side")
    span = 1.0
    for _ in range(_MAX_EXPAND):
        bad = grad(lo) > nu
        if not bad.any():
            break
        span *= 2.0
        lo = np.where(bad, center - span, lo)
    else:
        raise NumericError("bracket expansion failed on the lower side")
    for _ in range(_INNER_ITERS):
        mid = 0.5 * (lo + hi)
        below = grad(mid) < nu
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    if mode == "exact_box":
        x = np.clip(x, lo_box, hi_box)
    return x


def central_solve(
    costs: list[LocalCost],
    total: float,
    boxes: list[tuple[float, float]] | None = None,
    tol: float = 1e-9,
    mode: str = "penalized",
) -> CentralSolution:
    """Solve min sum f_i(x_i) s.t. sum x_i = total by bisection on nu.

    mode "penalized" treats each f_i (with its penalty) as the objective and
    searches the unconstrained stationary point at shared marginal price nu.
    mode "exact_box" enforces hard boxes by KKT clamping: coordinates solve
    the base gradient equation and are clipped, and nu is driven until the
    clipped aggregate meets ``total``.  Boxes default to each cost's penalty
    interval; agents without one are unbounded.

    Raises InfeasibilityError when no multiplier can meet the total (only
    possible with hard boxes) and NumericError if the tolerance is not met.
    """
    if mode == "exact-box":
        mode = "exact_box"
    if mode not in ("penalized", "exact_box"):
        raise ConfigurationError(f"unknown central_solve mode {mode!r}")
    if not costs:
        raise ConfigurationError("central_solve needs at least one cost")
    if not (math.isfinite(total)):
        raise ConfigurationError(f"total must be finite, got {total}")
    if not (tol > 0.0):
        raise ConfigurationError(f"tol must be positive, got {tol}")

    cs = CostSet(costs)
    n = cs.n
    if boxes is not None:
        if len(boxes) != n:
            raise ConfigurationError("boxes must match the number of costs")
        lo_box = np.array([b[0] for b in boxes])
        hi_box = np.array([b[1] for b in boxes])
    else:
        lo_box = np.where(cs.pen_kind > 0, cs.pen_lo, -np.inf)
        hi_box = np.where(cs.pen_kind > 0, cs.pen_hi, np.inf)
    if mode == "exact_box":
        if np.isfinite(lo_box).all() and total < float(lo_box.sum()) - tol:
            raise InfeasibilityError(
                f"total {total} is below the box floor {float(lo_box.sum())}"
            )
        if np.isfinite(hi_box).all() and total > float(hi_box.sum()) + tol:
            raise InfeasibilityError(
                f"total {total} is above the box ceiling {float(hi_box.sum())}"
            )

    def aggregate(nu: float) -> float:
        x = _coordinate_roots(cs, nu, mode, lo_box, hi_box)
        return math.fsum(x.tolist())

    # Bracket the multiplier, then bisect: aggregate(nu) is nondecreasing.
    nu_lo, nu_hi = -1.0, 1.0
    span = 1.0
    for _ in range(_MAX_EXPAND):
        if aggregate(nu_hi) >= total:
            break
        span *= 2.0
        nu_hi = span
    else:
        raise InfeasibilityError("no multiplier reaches the requested total from below")
    span = 1.0
    for _ in range(_MAX_EXPAND):
        if aggregate(nu_lo) <= total:
            break
        span *= 2.0
        nu_lo = -span
    else:
        raise InfeasibilityError("no multiplier reaches the requested total from above")

    iterations = 0
    nu = 0.5 * (nu_lo + nu_hi)
    for iterations in range(1, _OUTER_ITERS + 1):
        nu = 0.5 * (nu_lo + nu_hi)
        s = aggregate(nu)
        if abs(s - total) <= tol:
            break
        if s < total:
            nu_lo = nu
        else:
            nu_hi = nu
    else:
        raise NumericError(
            f"multiplier bisection did not reach |sum - total| <= {tol}"
        )

    x = _coordinate_roots(cs, nu, mode, lo_box, hi_box)
    gap = abs(math.fsum(x.tolist()) - total)
    if mode == "penalized":
        value = math.fsum(cs.value_per_agent(x).tolist())
    else:
        value = math.fsum(
            np.where(
                cs.quartic, cs.p1 * (x - cs.p2) ** 4, cs.p1 * x**2 + cs.p2 * x + cs.p3
            ).tolist()
        )
    x = np.asarray(x)
    x.flags.writeable = False
    return CentralSolution(
        x=x, multiplier=float(nu), value=float(value), mode=mode, gap=float(gap), iterations=iterations
    )


# --------------------------------------------------------------------------
# table loading
# --------------------------------------------------------------------------


def load_costs_csv(
    path: str | Path,
    penalty: str = "box",
    penalty_weight: float = 20.0,
    penalty_exponent: int = 2,
    penalty_sharpness: float = 5.0,
) -> list[LocalCost]:
    """Read per-agent costs from a CSV table with header i,kind,p1,p2,p3,lo,hi.

    Rows may appear in any order but must cover agent ids 0..n-1 exactly
    once.  Empty lo/hi cells mean no penalty for that agent; otherwise the
    shared penalty shape given by the keyword arguments is attached.
    """
    path = Path(path)
    rows: dict[int, LocalCost] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["i", "kind", "p1", "p2", "p3", "lo", "hi"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ConfigurationError(
                f"cost table must have header {','.join(expected)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                idx = int(row["i"])
                kind = row["kind"].strip()
                p1 = float(row["p1"])
                p2 = float(row["p2"]) if row["p2"].strip() else 0.0
                p3 = float(row["p3"]) if row["p3"].strip() else 0.0
            except (ValueError, AttributeError) as exc:
                raise ConfigurationError(f"bad cost row at line {lineno}: {row}") from exc
            if idx in rows:
                raise ConfigurationError(f"duplicate agent id {idx} at line {lineno}")
            pen = None
            lo_s, hi_s = row["lo"].strip(), row["hi"].strip()
            if lo_s or hi_s:
                if not (lo_s and hi_s):
                    raise ConfigurationError(f"line {lineno}: lo and hi must both be set or both empty")
                lo, hi = float(lo_s), float(hi_s)
                if penalty == "box":
                    pen = BoxPenalty(lo, hi, penalty_weight, penalty_exponent)
                elif penalty == "smooth_log":
                    pen = SmoothLogPenalty(lo, hi, penalty_sharpness)
                else:
                    raise ConfigurationError(f"unknown penalty kind {penalty!r}")
            rows[idx] = LocalCost(kind, p1, p2, p3, pen)
    n = len(rows)
    if n == 0:
        raise ConfigurationError(f"cost table {path} has no rows")
    if sorted(rows) != list(range(n)):
        raise ConfigurationError(f"agent ids must be 0..{n - 1} exactly once, got {sorted(rows)}")
    return [rows[i] for i in range(n)]
