"""Tests for local costs, penalties, the aggregate objective, and the oracle."""

import math

import numpy as np
import pytest

from dra_sim import (
    BoxPenalty,
    ConfigurationError,
    SmoothLogPenalty,
    aggregate_cost,
    central_solve,
    cost_curvature,
    cost_grad,
    cost_value,
    load_costs_csv,
    quadratic_cost,
    quartic_cost,
    smoothness_bound,
)


def central_diff(c, x, h):
    return (cost_value(c, x + h) - cost_value(c, x - h)) / (2.0 * h)


class TestCostValue:
    def test_quartic_interior_point_has_zero_penalty(self):
        c = quartic_cost(0.01, 1.0, penalty=BoxPenalty(1.0, 10.0, 20.0, 2))
        assert cost_value(c, 2.0) == pytest.approx(0.01, rel=1e-12)

    def test_plain_quadratic(self):
        assert cost_value(quadratic_cost(1.0), 3.0) == 9.0

    def test_box_penalty_outside(self):
        c = quadratic_cost(1.0, penalty=BoxPenalty(1.0, 10.0, 20.0, 2))
        # 20 * (12 - 10)^2 on top of the base 144.
        assert cost_value(c, 12.0) == pytest.approx(144.0 + 80.0, rel=1e-12)

    def test_quadratic_full_coefficients(self):
        c = quadratic_cost(2.0, 3.0, 4.0)
        assert cost_value(c, 2.0) == pytest.approx(2.0 * 4.0 + 3.0 * 2.0 + 4.0, rel=1e-14)

    def test_smooth_log_penalty_positive_everywhere(self):
        c = quadratic_cost(1.0, penalty=SmoothLogPenalty(1.0, 10.0, 5.0))
        base = quadratic_cost(1.0)
        for x in (-5.0, 1.0, 5.5, 10.0, 20.0):
            assert cost_value(c, x) > cost_value(base, x)

    def test_smooth_log_penalty_no_overflow(self):
        # mu * (x - hi) far beyond exp range must still evaluate, with the
        # penalty approaching the unit-slope asymptote x - hi.
        c = quadratic_cost(1.0, penalty=SmoothLogPenalty(1.0, 10.0, 5.0))
        base = quadratic_cost(1.0)
        with np.errstate(over="raise"):
            v = cost_value(c, 400.0) - cost_value(base, 400.0)
        assert v == pytest.approx(390.0, rel=1e-9)


class TestCostGrad:
    def test_quartic_hand_value(self):
        assert cost_grad(quartic_cost(0.01, 1.0), 2.0) == pytest.approx(0.04, rel=1e-12)

    def test_quadratic_hand_value(self):
        assert cost_grad(quadratic_cost(2.0, 1.0), 0.0) == 1.0

    def test_box_penalty_gradient_below_box(self):
        # The base quadratic has zero slope at 0, so only the penalty acts.
        c = quadratic_cost(1.0, penalty=BoxPenalty(1.0, 10.0, 20.0, 2))
        assert cost_grad(c, 0.0) == pytest.approx(-40.0, rel=1e-12)

    def test_matches_finite_difference_on_random_instances(self):
        rng = np.random.default_rng(808)
        for _ in range(1000):
            if rng.uniform() < 0.5:
                c = quadratic_cost(float(rng.uniform(0.1, 5.0)),
                                   float(rng.uniform(-3.0, 3.0)),
                                   float(rng.uniform(-1.0, 1.0)))
            else:
                c = quartic_cost(float(rng.uniform(0.001, 0.5)),
                                 float(rng.uniform(-2.0, 2.0)))
            if rng.uniform() < 0.5:
                pen_kind = rng.uniform()
                lo, hi = sorted(rng.uniform(-5.0, 5.0, size=2))
                if hi - lo > 1e-3:
                    pen = (BoxPenalty(lo, hi, 20.0, 2) if pen_kind < 0.5
                           else SmoothLogPenalty(lo, hi, 5.0))
                    c = quadratic_cost(c.p1, c.p2, c.p3, penalty=pen) if c.kind == "quadratic" \
                        else quartic_cost(c.p1, c.p2, penalty=pen)
            x = float(rng.uniform(-8.0, 8.0))
            h = 1e-6 * (1.0 + abs(x))
            num = central_diff(c, x, h)
            ana = cost_grad(c, x)
            assert ana == pytest.approx(num, rel=1e-5, abs=1e-7)

    def test_gradient_monotone(self):
        # Strict convexity shows up as a nondecreasing gradient.
        rng = np.random.default_rng(909)
        for _ in range(1000):
            c = (quadratic_cost(float(rng.uniform(0.1, 4.0)), float(rng.uniform(-2, 2)))
                 if rng.uniform() < 0.5
                 else quartic_cost(float(rng.uniform(0.001, 0.3)), float(rng.uniform(-2, 2))))
            x, y = sorted(rng.uniform(-10.0, 10.0, size=2))
            assert cost_grad(c, x) <= cost_grad(c, y) + 1e-12


class TestCostCurvature:
    def test_quadratic_constant(self):
        assert cost_curvature(quadratic_cost(1.5), 7.0) == 3.0

    def test_quartic_hand_value(self):
        # 12 * 0.01 * (10 - 1)^2 at the far box corner.
        assert cost_curvature(quartic_cost(0.01, 1.0), 10.0) == pytest.approx(9.72, rel=1e-12)


class TestValidation:
    def test_quadratic_needs_positive_curvature(self):
        with pytest.raises(ConfigurationError):
            quadratic_cost(0.0)
        with pytest.raises(ConfigurationError):
            quadratic_cost(-1.0)

    def test_quartic_needs_positive_scale(self):
        with pytest.raises(ConfigurationError):
            quartic_cost(0.0, 1.0)

    def test_box_penalty_validation(self):
        with pytest.raises(ConfigurationError):
            BoxPenalty(5.0, 1.0, 20.0, 2)
        with pytest.raises(ConfigurationError):
            BoxPenalty(1.0, 5.0, 0.0, 2)
        with pytest.raises(ConfigurationError):
            BoxPenalty(1.0, 5.0, 20.0, 1)

    def test_smooth_log_penalty_validation(self):
        with pytest.raises(ConfigurationError):
            SmoothLogPenalty(5.0, 1.0, 5.0)
        with pytest.raises(ConfigurationError):
            SmoothLogPenalty(1.0, 5.0, 0.0)


class TestSmoothness:
    def test_single_quadratic(self):
        est = smoothness_bound([quadratic_cost(1.0)], (-10.0, 10.0))
        assert est.u == pytest.approx(1.1, rel=1e-12)

    def test_quartic_on_box(self):
        est = smoothness_bound([quartic_cost(0.01, 1.0)], (1.0, 10.0))
        assert est.u == pytest.approx(5.346, rel=1e-9)
        assert est.max_curvature == pytest.approx(9.72, rel=1e-9)

    def test_u_dominates_sampled_curvature(self):
        rng = np.random.default_rng(117)
        for _ in range(50):
            costs = [quartic_cost(float(rng.uniform(0.001, 0.2)), float(rng.uniform(-2, 2)))
                     for _ in range(4)]
            lo, hi = sorted(rng.uniform(-8.0, 8.0, size=2))
            if hi - lo < 0.1:
                continue
            est = smoothness_bound(costs, (lo, hi))
            xs = rng.uniform(lo, hi, size=100)
            worst = max(cost_curvature(c, float(x)) for c in costs for x in xs)
            assert 2.0 * est.u >= worst

    def test_rejects_thin_grid(self):
        with pytest.raises(ConfigurationError):
            smoothness_bound([quadratic_cost(1.0)], (0.0, 1.0), grid_points=10)

    def test_rejects_empty_domain(self):
        with pytest.raises(ConfigurationError):
            smoothness_bound([quadratic_cost(1.0)], (2.0, 2.0))


class TestCentralSolve:
    def test_symmetric_dispatch_splits_evenly(self):
        costs = [quadratic_cost(0.5, 3.0, 1.0) for _ in range(10)]
        boxes = [(20.0, 110.0)] * 10
        sol = central_solve(costs, 600.0, boxes=boxes, mode="exact_box")
        assert np.allclose(sol.x, 60.0, atol=1e-7)
        assert abs(sol.x.sum() - 600.0) <= 1e-7

    def test_two_agent_hand_solution(self):
        costs = [quadratic_cost(1.0), quadratic_cost(2.0)]
        sol = central_solve(costs, 3.0)
        assert sol.x[0] == pytest.approx(2.0, abs=1e-8)
        assert sol.x[1] == pytest.approx(1.0, abs=1e-8)
        assert sol.multiplier == pytest.approx(4.0, abs=1e-7)
        assert sol.value == pytest.approx(6.0, abs=1e-7)

    def test_equal_gradients_at_optimum(self):
        rng = np.random.default_rng(2718)
        for _ in range(25):
            n = int(rng.integers(2, 9))
            costs = [quadratic_cost(float(rng.uniform(0.2, 3.0)),
                                    float(rng.uniform(-2.0, 2.0)))
                     for _ in range(n)]
            b = float(rng.uniform(-10.0, 10.0))
            sol = central_solve(costs, b, tol=1e-10)
            grads = [cost_grad(c, float(x)) for c, x in zip(costs, sol.x)]
            assert max(grads) - min(grads) <= 1e-7
            assert abs(sol.x.sum() - b) <= 1e-9 * (1.0 + abs(b))

    def test_penalized_approaches_exact_box(self):
        # Heavier penalty weights pull the penalized optimum into the box.
        rng = np.random.default_rng(333)
        costs_base = [(float(rng.uniform(0.2, 2.0)), float(rng.uniform(-1.0, 1.0)))
                      for _ in range(5)]
        boxes = [(0.0, 1.5)] * 5
        b = 6.5  # below the 7.5 ceiling yet tight enough to activate caps
        gaps = []
        for sigma in (20.0, 200.0, 2000.0):
            costs = [quadratic_cost(a, bb, penalty=BoxPenalty(0.0, 1.5, sigma, 2))
                     for a, bb in costs_base]
            pen = central_solve(costs, b, mode="penalized", tol=1e-10)
            exact_costs = [quadratic_cost(a, bb) for a, bb in costs_base]
            exact = central_solve(exact_costs, b, boxes=boxes, mode="exact_box", tol=1e-10)
            gaps.append(float(np.max(np.abs(pen.x - exact.x))))
        assert gaps[0] >= gaps[1] >= gaps[2]

    def test_exact_box_clamps_to_bounds(self):
        costs = [quadratic_cost(1.0), quadratic_cost(1.0)]
        sol = central_solve(costs, 10.0, boxes=[(0.0, 2.0), (0.0, 20.0)], mode="exact_box")
        assert sol.x[0] == pytest.approx(2.0, abs=1e-8)
        assert sol.x[1] == pytest.approx(8.0, abs=1e-8)

    def test_infeasible_box_rejected(self):
        costs = [quadratic_cost(1.0), quadratic_cost(1.0)]
        with pytest.raises(Exception):
            central_solve(costs, 100.0, boxes=[(0.0, 1.0), (0.0, 1.0)], mode="exact_box")

    def test_quartic_instances(self):
        costs = [quartic_cost(0.01, 1.0), quartic_cost(0.02, 2.0), quartic_cost(0.05, -1.0)]
        sol = central_solve(costs, 9.0, tol=1e-10)
        grads = [cost_grad(c, float(x)) for c, x in zip(costs, sol.x)]
        assert max(grads) - min(grads) <= 1e-6
        assert abs(sol.x.sum() - 9.0) <= 1e-8


class TestAggregateCost:
    def test_two_squares(self):
        costs = [quadratic_cost(1.0), quadratic_cost(1.0)]
        assert aggregate_cost(costs, np.array([1.0, 2.0])) == 5.0

    def test_permutation_invariance_for_identical_costs(self):
        costs = [quadratic_cost(0.7, 0.3)] * 6
        rng = np.random.default_rng(12)
        x = rng.uniform(-5, 5, size=6)
        a = aggregate_cost(costs, x)
        b = aggregate_cost(costs, x[rng.permutation(6)])
        assert a == pytest.approx(b, rel=1e-12)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            aggregate_cost([quadratic_cost(1.0)], np.array([1.0, 2.0]))


class TestCostTable(object):
    HEADER = "i,kind,p1,p2,p3,lo,hi\n"

    def test_round_trip_mixed_rows(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER
                     + "0,quadratic,1.0,2.0,0.5,,\n"
                     + "1,quartic,0.01,1.0,0,1,10\n")
        costs = load_costs_csv(p)
        assert len(costs) == 2
        assert costs[0].kind == "quadratic"
        assert costs[0].penalty is None
        assert costs[1].kind == "quartic"
        assert isinstance(costs[1].penalty, BoxPenalty)
        assert cost_value(costs[1], 2.0) == pytest.approx(0.01, rel=1e-12)

    def test_rows_in_any_order(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER
                     + "1,quadratic,2.0,,,,\n"
                     + "0,quadratic,1.0,,,,\n")
        costs = load_costs_csv(p)
        assert cost_curvature(costs[0], 0.0) == 2.0
        assert cost_curvature(costs[1], 0.0) == 4.0

    def test_rejects_bad_header(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text("agent,kind,p1,p2,p3,lo,hi\n0,quadratic,1,,,,\n")
        with pytest.raises(ConfigurationError):
            load_costs_csv(p)

    def test_rejects_duplicate_agent(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER + "0,quadratic,1,,,,\n0,quadratic,2,,,,\n")
        with pytest.raises(ConfigurationError):
            load_costs_csv(p)

    def test_rejects_gap_in_ids(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER + "0,quadratic,1,,,,\n2,quadratic,2,,,,\n")
        with pytest.raises(ConfigurationError):
            load_costs_csv(p)

    def test_rejects_unknown_kind(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER + "0,cubic,1,,,,\n")
        with pytest.raises(ConfigurationError):
            load_costs_csv(p)

    def test_rejects_half_open_box(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER + "0,quadratic,1,,,1,\n")
        with pytest.raises(ConfigurationError):
            load_costs_csv(p)

    def test_smooth_penalty_option(self, tmp_path):
        p = tmp_path / "costs.csv"
        p.write_text(self.HEADER + "0,quadratic,1.0,,,0,5\n")
        costs = load_costs_csv(p, penalty="smooth_log", penalty_sharpness=3.0)
        assert isinstance(costs[0].penalty, SmoothLogPenalty)
        assert costs[0].penalty.sharpness == 3.0
