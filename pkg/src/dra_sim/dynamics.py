"""The resource-allocation update law, its delayed variant, and its bounds.

Each step, every link {i, j} carries one scalar flow
w_ij * g_n(g_l(f_i'(x_i)) - g_l(f_j'(x_j))), subtracted from i and added to
j scaled by the step rate.  Because both endpoints apply the same number,
the state total is conserved to rounding at every step regardless of the
topology, of which links fail, and of message delays, as long as delays are
symmetric per link.  Gradients equalize at the fixed points, which is the
optimality condition of the equality-coupled problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, InfeasibilityError
from .graph import WeightedGraph, dispersion, laplacian
from .mappings import ClampCounter, SectorMap, apply_map_array
from .objective import CostSet, LocalCost

__all__ = [
    "DelayedNetworkState",
    "DelaySchedule",
    "StepRateBound",
    "EquilibriumReport",
    "SectorDiagnostics",
    "edge_flow",
    "step_delay_free",
    "init_delayed_state",
    "step_delayed",
    "step_rate_bound",
    "step_rate_from_sector",
    "max_delay_bound",
    "feasible_init",
    "equilibrium_check",
    "gradient_dispersion",
    "sector_diagnostics",
]


def _as_costset(costs) -> CostSet:
    return costs if isinstance(costs, CostSet) else CostSet(costs)


# --------------------------------------------------------------------------
# flows
# --------------------------------------------------------------------------


def edge_flow(
    weight: float, grad_i: float, grad_j: float, node_map: SectorMap, link_map: SectorMap
) -> float:
    """Flow carried by one link: weight * g_n(g_l(grad_i) - g_l(grad_j)).

    Antisymmetric in (i, j) because both maps are odd, which is what makes
    the pairwise update conservative.
    """
    if not weight > 0.0:
        raise ConfigurationError(f"edge_flow needs a positive link weight, got {weight}")
    gl = apply_map_array(link_map, np.asarray([grad_i, grad_j]))
    return float(weight * apply_map_array(node_map, np.asarray([gl[0] - gl[1]]))[0])


def _flows(
    gl: np.ndarray,
    ei: np.ndarray,
    ej: np.ndarray,
    w: np.ndarray,
    node_map: SectorMap,
    counter: ClampCounter | None,
) -> np.ndarray:
    return w * apply_map_array(node_map, gl[ei] - gl[ej], counter)


def _apply_chunks(x: np.ndarray, eta: float, chunks) -> np.ndarray:
    """Apply queued flows pairwise: x_i -= eta*phi, x_j += eta*phi.

    Flows are accumulated into a delta vector in a fixed order (emission
    step, then link order) before a single state update, so results are
    reproducible bit for bit and the total moves only by rounding.
    """
    if not chunks:
        return x.copy()
    n = x.shape[0]
    dec_idx = np.concatenate([c[0] for c in chunks])
    dec_phi = np.concatenate([c[1] for c in chunks])
    inc_idx = np.concatenate([c[2] for c in chunks])
    inc_phi = np.concatenate([c[3] for c in chunks])
    dec = np.bincount(dec_idx, weights=dec_phi, minlength=n)
    inc = np.bincount(inc_idx, weights=inc_phi, minlength=n)
    return x + eta * (inc - dec)


_EMPTY_I = np.zeros(0, dtype=int)
_EMPTY_F = np.zeros(0)


# --------------------------------------------------------------------------
# delay-free stepping
# --------------------------------------------------------------------------


def step_delay_free(
    x: np.ndarray,
    graph: WeightedGraph,
    costs,
    node_map: SectorMap,
    link_map: SectorMap,
    eta: float,
    grads: np.ndarray | None = None,
    edges: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    node_counter: ClampCounter | None = None,
    link_counter: ClampCounter | None = None,
) -> np.ndarray:
    """One synchronous update over all links of ``graph``.

    ``grads`` and ``edges`` may be supplied when the caller already computed
    them (the scenario loop does); otherwise they are derived here.  Returns
    the next state; the input is not modified.
    """
    x = np.asarray(x, dtype=float)
    cs = _as_costset(costs)
    if x.shape != (cs.n,) or graph.n != cs.n:
        raise ConfigurationError("state, graph, and costs must agree on n")
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ConfigurationError(f"step rate must be positive and finite, got {eta}")
    if grads is None:
        grads = cs.grad(x)
    if edges is None:
        edges = graph.edges()
    ei, ej, w = edges
    gl = apply_map_array(link_map, grads, link_counter)
    phi = _flows(gl, ei, ej, w, node_map, node_counter)
    return _apply_chunks(x, eta, [(ei, phi, ej, phi)])


# --------------------------------------------------------------------------
# delayed stepping
# --------------------------------------------------------------------------


class DelaySchedule:
    """Per-link, per-step transmission delays in {0, ..., tau_bar}.

    mode "uniform" draws a fresh delay for every emission from a per-step
    derived stream; "fixed" always uses tau_bar; "per_link" draws one delay
    per link once and keeps it for the whole run.  Delays are symmetric (one
    draw per unordered link) unless ``symmetric=False``, an experimentation
    mode in which the two endpoints of a link apply their halves of the flow
    at different times.  Asymmetric schedules break step-by-step
    conservation of the state total while messages are in flight, which is
    why the stepper refuses them unless strict feasibility is switched off.
    """

    def __init__(self, tau_bar: int, mode: str = "uniform", seed: int = 0, symmetric: bool = True):
        if tau_bar < 0 or int(tau_bar) != tau_bar:
            raise ConfigurationError(f"tau_bar must be a nonnegative integer, got {tau_bar}")
        if mode not in ("uniform", "fixed", "per_link"):
            raise ConfigurationError(f"unknown delay mode {mode!r}")
        self.tau_bar = int(tau_bar)
        self.mode = mode
        self.seed = int(seed)
        self.symmetric = bool(symmetric)
        self._per_link: dict[tuple[int, int], int] = {}

    def _per_link_delay(self, i: int, j: int, direction: int) -> int:
        key = (i, j) if self.symmetric else (i, j, direction)
        got = self._per_link.get(key)
        if got is None:
            rng = np.random.default_rng([self.seed, 0xDE1A, i, j, direction])
            got = int(rng.integers(0, self.tau_bar + 1))
            self._per_link[key] = got
        return got

    def draw(self, step: int, ei: np.ndarray, ej: np.ndarray, direction: int = 0) -> np.ndarray:
        """Delays for the given links emitted at ``step``.

        ``direction`` selects the independent second stream in asymmetric
        mode; symmetric schedules ignore it.
        """
        m = len(ei)
        if self.tau_bar == 0 or m == 0:
            return np.zeros(m, dtype=int)
        if self.mode == "fixed":
            return np.full(m, self.tau_bar, dtype=int)
        if self.mode == "per_link":
            d = 0 if self.symmetric else direction
            return np.array(
                [self._per_link_delay(i, j, d) for i, j in zip(ei.tolist(), ej.tolist())],
                dtype=int,
            )
        rng = np.random.default_rng([self.seed, 0xDE1A, int(step), direction])
        return rng.integers(0, self.tau_bar + 1, size=m)


@dataclass
class DelayedNetworkState:
    """Simulation state of the delayed dynamics at step ``step``.

    ``grad_history`` is a ring buffer of depth tau_bar + 1 over the
    link-mapped gradients: row (s mod (tau_bar+1)) holds g_l(grad(x(s)))
    for the most recent steps s, prefilled with the step-0 values.
    ``pending`` buckets flows by arrival step modulo (tau_bar + 1); each
    bucket is a list of (dec_idx, dec_phi, inc_idx, inc_phi) chunks in
    emission order.
    """

    x: np.ndarray
    step: int
    tau_bar: int
    grad_history: np.ndarray
    pending: list = field(default_factory=list)

    def history_slot(self, lag: int) -> np.ndarray:
        """g_l(grad) as of ``lag`` steps before ``step`` (0 <= lag <= tau_bar)."""
        if not 0 <= lag <= self.tau_bar:
            raise DomainError(f"history holds lags 0..{self.tau_bar}, asked for {lag}")
        s = self.step - lag
        if s < 0:
            s = 0
        return self.grad_history[s % (self.tau_bar + 1)]


def init_delayed_state(
    x0: np.ndarray, tau_bar: int, costs, link_map: SectorMap
) -> DelayedNetworkState:
    """Fresh state at step 0 with history backfilled from the initial point."""
    if tau_bar < 0 or int(tau_bar) != tau_bar:
        raise ConfigurationError(f"tau_bar must be a nonnegative integer, got {tau_bar}")
    x0 = np.asarray(x0, dtype=float).copy()
    cs = _as_costset(costs)
    if x0.shape != (cs.n,):
        raise ConfigurationError("initial state length must match the cost count")
    gl0 = apply_map_array(link_map, cs.grad(x0))
    hist = np.tile(gl0, (int(tau_bar) + 1, 1))
    return DelayedNetworkState(
        x=x0,
        step=0,
        tau_bar=int(tau_bar),
        grad_history=hist,
        pending=[[] for _ in range(int(tau_bar) + 1)],
    )


def step_delayed(
    state: DelayedNetworkState,
    graph: WeightedGraph,
    schedule: DelaySchedule,
    costs,
    node_map: SectorMap,
    link_map: SectorMap,
    eta: float,
    failure_keep: np.ndarray | None = None,
    strict_feasibility: bool = True,
    grads: np.ndarray | None = None,
    edges: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    node_counter: ClampCounter | None = None,
    link_counter: ClampCounter | None = None,
) -> DelayedNetworkState:
    """One step of the delayed dynamics with message semantics.

    Every link active at the current step emits one flow computed from the
    current link-mapped gradients; the flow is applied to both endpoints
    with opposite signs at arrival, ``delay`` steps later, where ``delay``
    comes from the schedule.  A zero delay reproduces the delay-free update
    bit for bit.  ``failure_keep`` is an optional boolean mask over the
    graph's links (row-major i < j order) selecting which are up this step;
    emissions happen only on active links, but flows already in flight
    arrive regardless of the link's later state.
    """
    if schedule.tau_bar != state.tau_bar:
        raise ConfigurationError(
            f"schedule tau_bar {schedule.tau_bar} does not match state tau_bar {state.tau_bar}"
        )
    if not schedule.symmetric and strict_feasibility:
        raise ConfigurationError(
            "asymmetric delay schedules break conservation of the state total; "
            "pass strict_feasibility=False to run them anyway"
        )
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ConfigurationError(f"step rate must be positive and finite, got {eta}")
    cs = _as_costset(costs)
    x = state.x
    k = state.step
    depth = state.tau_bar + 1

    if grads is None:
        grads = cs.grad(x)
    if edges is None:
        edges = graph.edges()
    ei, ej, w = edges
    if failure_keep is not None:
        keep = np.asarray(failure_keep, dtype=bool)
        if keep.shape != ei.shape:
            raise ConfigurationError(
                f"failure mask length {keep.shape} does not match link count {ei.shape}"
            )
        ei, ej, w = ei[keep], ej[keep], w[keep]

    gl = apply_map_array(link_map, grads, link_counter)
    hist = state.grad_history.copy()
    hist[k % depth] = gl

    buckets = [list(b) for b in state.pending]
    phi = _flows(gl, ei, ej, w, node_map, node_counter)
    if schedule.symmetric:
        delays = schedule.draw(k, ei, ej)
        if state.tau_bar == 0:
            buckets[k % depth].append((ei, phi, ej, phi))
        else:
            for d in range(depth):
                sel = delays == d
                if sel.any():
                    buckets[(k + d) % depth].append((ei[sel], phi[sel], ej[sel], phi[sel]))
    else:
        d_out = schedule.draw(k, ei, ej, direction=0)
        d_in = schedule.draw(k, ei, ej, direction=1)
        for d in range(depth):
            sel = d_out == d
            if sel.any():
                buckets[(k + d) % depth].append((ei[sel], phi[sel], _EMPTY_I, _EMPTY_F))
            sel = d_in == d
            if sel.any():
                buckets[(k + d) % depth].append((_EMPTY_I, _EMPTY_F, ej[sel], phi[sel]))

    due = buckets[k % depth]
    x_new = _apply_chunks(x, eta, due)
    buckets[k % depth] = []
    return DelayedNetworkState(
        x=x_new, step=k + 1, tau_bar=state.tau_bar, grad_history=hist, pending=buckets
    )


# --------------------------------------------------------------------------
# analytical bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRateBound:
    """Largest provably safe step rate for given sector and spectral data.

    eta_max = (kn * kl * lambda2) / (u * lambda_max^2 * Kn^2 * Kl^2 * (window + tau_bar + 1))

    where (kn, Kn) and (kl, Kl) are the node / link sector pairs, lambda2
    and lambda_max bound the union Laplacian over a connectivity window of
    ``window`` extra steps, u is the quadratic smoothness constant, and
    tau_bar the delay bound.  Shrinks linearly as the window or the delay
    grows.
    """

    eta_max: float
    kappa_node: float
    kappa_link: float
    big_k_node: float
    big_k_link: float
    lambda2: float
    lambda_max: float
    u: float
    window: int
    tau_bar: int


def step_rate_from_sector(
    kappa_node: float,
    big_k_node: float,
    kappa_link: float,
    big_k_link: float,
    lambda2: float,
    lambda_max: float,
    u: float,
    window: int = 0,
    tau_bar: int = 0,
) -> float:
    """The safe-step-rate formula on raw sector and spectral constants.

    Useful when the sector pair comes from somewhere other than a shipped
    map, e.g. a first-order approximation or published constants.
    """
    if not (lambda2 > 0.0):
        raise DomainError(
            "step rate bound needs lambda2 > 0: the union graph over the "
            "connectivity window must be connected"
        )
    if not (lambda_max >= lambda2):
        raise DomainError(f"lambda_max {lambda_max} must be >= lambda2 {lambda2}")
    if not (u > 0.0 and math.isfinite(u)):
        raise DomainError(f"smoothness constant must be positive, got {u}")
    if min(kappa_node, kappa_link) <= 0.0 or big_k_node < kappa_node or big_k_link < kappa_link:
        raise DomainError("sector parameters need 0 < kappa <= big_k")
    if window < 0 or tau_bar < 0:
        raise ConfigurationError("window and tau_bar must be nonnegative")
    numerator = kappa_node * kappa_link * lambda2
    denominator = u * lambda_max**2 * big_k_node**2 * big_k_link**2 * (window + tau_bar + 1)
    return numerator / denominator


def step_rate_bound(
    node_map: SectorMap,
    link_map: SectorMap,
    lambda2: float,
    lambda_max: float,
    u: float,
    window: int = 0,
    tau_bar: int = 0,
) -> StepRateBound:
    """Evaluate the safe-step-rate formula; see :class:`StepRateBound`."""
    eta_max = step_rate_from_sector(
        node_map.kappa,
        node_map.big_k,
        link_map.kappa,
        link_map.big_k,
        lambda2,
        lambda_max,
        u,
        window,
        tau_bar,
    )
    return StepRateBound(
        eta_max=eta_max,
        kappa_node=node_map.kappa,
        kappa_link=link_map.kappa,
        big_k_node=node_map.big_k,
        big_k_link=link_map.big_k,
        lambda2=lambda2,
        lambda_max=lambda_max,
        u=u,
        window=int(window),
        tau_bar=int(tau_bar),
    )


def max_delay_bound(
    node_map: SectorMap,
    link_map: SectorMap,
    lambda2: float,
    lambda_max: float,
    u: float,
    window: int,
    eta: float,
) -> float:
    """Largest delay budget compatible with step rate ``eta``.

    Inverts the step-rate formula: any integer tau_bar strictly below the
    returned value keeps eta admissible.  The result can be negative, in
    which case ``eta`` is too large even without delays.
    """
    if not (eta > 0.0 and math.isfinite(eta)):
        raise DomainError(f"step rate must be positive, got {eta}")
    if not (lambda2 > 0.0):
        raise DomainError("max_delay_bound needs lambda2 > 0 (connected union)")
    if window < 0:
        raise ConfigurationError("window must be nonnegative")
    if not (u > 0.0 and math.isfinite(u)):
        raise DomainError(f"smoothness constant must be positive, got {u}")
    numerator = node_map.kappa * link_map.kappa * lambda2
    denominator = u * eta * lambda_max**2 * node_map.big_k**2 * link_map.big_k**2
    return numerator / denominator - 1.0 - window


# --------------------------------------------------------------------------
# initialization and equilibrium
# --------------------------------------------------------------------------


def feasible_init(
    n: int,
    total: float,
    mode: str = "equal",
    seed: int = 0,
    boxes: list[tuple[float, float]] | None = None,
    values: np.ndarray | None = None,
) -> np.ndarray:
    """A start vector whose coordinates sum to ``total`` exactly.

    mode "equal" splits evenly; "random_simplex" draws proportions from a
    flat Dirichlet (normalized exponentials); "explicit" takes ``values``,
    which must already sum to the total within 1e-9 * (1 + |total|).  With
    ``boxes`` the vector is additionally projected inside the per-coordinate
    intervals and rebalanced, which requires sum(lo) <= total <= sum(hi).
    In every mode one free coordinate absorbs the final rounding residue so
    the total is exact.
    """
    if n < 1:
        raise ConfigurationError(f"feasible_init needs n >= 1, got {n}")
    if not math.isfinite(total):
        raise ConfigurationError(f"total must be finite, got {total}")
    if mode == "equal":
        x = np.full(n, total / n)
    elif mode == "random_simplex":
        rng = np.random.default_rng([int(seed), 0x1217])
        shares = rng.exponential(1.0, n)
        x = total * shares / shares.sum()
    elif mode == "explicit":
        if values is None:
            raise ConfigurationError("explicit init mode needs a values vector")
        x = np.asarray(values, dtype=float).copy()
        if x.shape != (n,):
            raise ConfigurationError(f"explicit init vector must have length {n}")
        if not np.all(np.isfinite(x)):
            raise ConfigurationError("explicit init vector must be finite")
        if abs(math.fsum(x.tolist()) - total) > 1e-9 * (1.0 + abs(total)):
            raise ConfigurationError(
                f"explicit init vector sums to {math.fsum(x.tolist())}, not {total}"
            )
    else:
        raise ConfigurationError(f"unknown init mode {mode!r}")

    if boxes is None:
        if n > 1:
            x[-1] = total - math.fsum(x[:-1].tolist())
        return x

    if len(boxes) != n:
        raise ConfigurationError("boxes must have one (lo, hi) pair per coordinate")
    lo = np.array([b[0] for b in boxes], dtype=float)
    hi = np.array([b[1] for b in boxes], dtype=float)
    if np.any(lo > hi):
        raise ConfigurationError("each box needs lo <= hi")
    if not (lo.sum() <= total <= hi.sum()):
        raise InfeasibilityError(
            f"total {total} outside [{lo.sum()}, {hi.sum()}], no feasible point in the boxes"
        )
    x = np.clip(x, lo, hi)
    for _ in range(200):
        residue = total - math.fsum(x.tolist())
        if abs(residue) <= 1e-12 * (1.0 + abs(total)):
            break
        room = (hi - x) if residue > 0 else (x - lo)
        total_room = room.sum()
        if total_room <= 0.0:
            break
        x = np.clip(x + residue * room / total_room, lo, hi)
    # Exact fix-up on the coordinate with the most slack on the needed side.
    residue = total - math.fsum(x.tolist())
    if residue != 0.0:
        room = (hi - x) if residue > 0 else (x - lo)
        idx = int(np.argmax(room))
        if room[idx] >= abs(residue):
            x[idx] = x[idx] + residue
        else:
            raise InfeasibilityError("could not rebalance inside the boxes")
    return x


@dataclass(frozen=True)
class EquilibriumReport:
    """Gradient agreement at a state: spread = max f_i' - min f_i'."""

    spread: float
    converged: bool
    grad_min: float
    grad_max: float


def equilibrium_check(x: np.ndarray, costs, tol: float = 1e-6) -> EquilibriumReport:
    """Check first-order optimality: all marginal costs within ``tol``."""
    cs = _as_costset(costs)
    g = cs.grad(np.asarray(x, dtype=float))
    spread = float(g.max() - g.min())
    return EquilibriumReport(
        spread=spread, converged=spread <= tol, grad_min=float(g.min()), grad_max=float(g.max())
    )


def gradient_dispersion(x: np.ndarray, costs) -> float:
    """Euclidean norm of the gradient's deviation from its mean.

    Zero exactly at consensus of marginal costs, which together with the
    conserved total characterizes the optimum.
    """
    cs = _as_costset(costs)
    return float(np.linalg.norm(dispersion(cs.grad(np.asarray(x, dtype=float)))))


# --------------------------------------------------------------------------
# sampling diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SectorDiagnostics:
    """Observed alignment of nonlinear flows with the linear reference.

    ``flow_ratio`` entries compare grad . Phi against grad . L grad (the
    linear flow computed by the same accumulation); the product sector
    [kn*kl, Kn*Kl] contains the ratio for maps that respect their sectors,
    up to quantizer corner cases, so small excursions are reported rather
    than asserted.  The Rayleigh entries check the two-sided bound
    lambda2*kl*|x_disp|^2 <= x . L g_l(x) <= lambda_max*Kl*|x_disp|^2 on
    random states.
    """

    flow_ratio_min: float
    flow_ratio_max: float
    flow_violation_rate: float
    flow_worst_excursion: float
    rayleigh_violation_rate: float
    rayleigh_worst_excursion: float
    sector_low: float
    sector_high: float
    samples_used: int


def sector_diagnostics(
    graph: WeightedGraph,
    costs,
    node_map: SectorMap,
    link_map: SectorMap,
    samples: int = 200,
    seed: int = 0,
    state_range: tuple[float, float] = (-10.0, 10.0),
) -> SectorDiagnostics:
    """Sample random states and report sector alignment statistics."""
    if samples < 1:
        raise ConfigurationError(f"samples must be >= 1, got {samples}")
    cs = _as_costset(costs)
    if graph.n != cs.n:
        raise ConfigurationError("graph and costs must agree on n")
    rng = np.random.default_rng([int(seed), 0xD1A6])
    ei, ej, w = graph.edges()
    lap = laplacian(graph)
    eigs = np.linalg.eigvalsh(lap)
    lam2 = float(eigs[1]) if len(eigs) > 1 else 0.0
    lam_max = float(eigs[-1])
    ident = SectorMap("identity", 1.0, 1.0, (0.0, np.inf))
    lo_bound = node_map.kappa * link_map.kappa
    hi_bound = node_map.big_k * link_map.big_k
    range_lo, range_hi = state_range
    n = cs.n

    ratios = []
    flow_worst = 0.0
    ray_bad = 0
    ray_worst = 0.0
    used = 0
    for _ in range(samples):
        x = range_lo + (range_hi - range_lo) * rng.random(n)
        grads = cs.grad(x)
        gl = apply_map_array(link_map, grads)
        phi = _flows(gl, ei, ej, w, node_map, None)
        phi_lin = _flows(grads, ei, ej, w, ident, None)
        stacked = np.zeros(n)
        stacked_lin = np.zeros(n)
        np.add.at(stacked, ei, phi)
        np.add.at(stacked, ej, -phi)
        np.add.at(stacked_lin, ei, phi_lin)
        np.add.at(stacked_lin, ej, -phi_lin)
        den = float(grads @ stacked_lin)
        if abs(den) > 1e-12 * (1.0 + float(np.abs(grads).max()) ** 2):
            r = float(grads @ stacked) / den
            ratios.append(r)
            flow_worst = max(flow_worst, lo_bound - r, r - hi_bound)
            used += 1
        # Rayleigh check on the raw state through the link map.
        xd = dispersion(x)
        quad = float(x @ (lap @ apply_map_array(link_map, x)))
        nd = float(xd @ xd)
        low = lam2 * link_map.kappa * nd
        high = lam_max * link_map.big_k * nd
        slack = 1e-9 * max(abs(low), abs(high), 1.0)
        if quad < low - slack or quad > high + slack:
            ray_bad += 1
            ray_worst = max(
                ray_worst,
                (low - quad) / max(abs(low), 1e-300),
                (quad - high) / max(abs(high), 1e-300),
            )

    if ratios:
        arr = np.asarray(ratios)
        bad = int(np.count_nonzero((arr < lo_bound - 1e-12) | (arr > hi_bound + 1e-12)))
        ratio_min, ratio_max = float(arr.min()), float(arr.max())
        viol_rate = bad / used
    else:
        ratio_min = ratio_max = float("nan")
        viol_rate = 0.0
    return SectorDiagnostics(
        flow_ratio_min=ratio_min,
        flow_ratio_max=ratio_max,
        flow_violation_rate=viol_rate,
        flow_worst_excursion=max(flow_worst, 0.0),
        rayleigh_violation_rate=ray_bad / samples,
        rayleigh_worst_excursion=ray_worst,
        sector_low=lo_bound,
        sector_high=hi_bound,
        samples_used=used,
    )
