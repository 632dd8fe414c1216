"""Tests for scenario assembly, presets, the run loop, and the benchmark."""

import dataclasses
import math

import numpy as np
import pytest

from dra_sim import (
    BoxPenalty,
    ConfigurationError,
    PRESET_NAMES,
    PRESET_SWEEPS,
    ScenarioConfig,
    SmoothLogPenalty,
    build_instance,
    erdos_renyi,
    failure_mask,
    identity_map,
    laplacian,
    preset,
    run,
    scaling_benchmark,
    smoothness_bound,
    spectral_summary,
    step_rate_bound,
    summary_to_text,
    to_edge_list,
    trace_to_csv,
)
from dra_sim.scenario import apply_key, config_items


def small_static_config(**over):
    base = dict(n=10, total=20.0, eta=0.02, horizon=400, seed=3,
                topology_kind="er", topology_p=0.5,
                costs_kind="quadratic", costs_a_lo=0.4, costs_a_hi=1.2,
                costs_penalty="none", node_kind="identity", link_kind="identity")
    base.update(over)
    return ScenarioConfig(**base)


class TestScenarioConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            small_static_config(eta=0.0)
        with pytest.raises(ConfigurationError):
            small_static_config(horizon=0)
        with pytest.raises(ConfigurationError):
            small_static_config(p_fail=1.5)
        with pytest.raises(ConfigurationError):
            small_static_config(tau_bar=-1)
        with pytest.raises(ConfigurationError):
            small_static_config(record_stride=0)
        with pytest.raises(ConfigurationError):
            small_static_config(topology_kind="torus")
        with pytest.raises(ConfigurationError):
            small_static_config(n=1)

    def test_apply_key_returns_new_config(self):
        cfg = preset("fig_dyn")
        cfg2 = apply_key(cfg, "eta", 0.25)
        assert cfg2.eta == 0.25
        assert cfg.eta == 0.1

    def test_apply_key_unknown_key(self):
        with pytest.raises(ConfigurationError, match="nonexistent.key"):
            apply_key(preset("fig_dyn"), "nonexistent.key", 1)

    def test_apply_key_range_check_names_key(self):
        with pytest.raises(ConfigurationError, match="adversity.p_fail"):
            apply_key(preset("fig_dyn"), "adversity.p_fail", 1.5)

    def test_config_items_cover_every_field(self):
        cfg = preset("dispatch_adversity")
        keys = {k for k, _ in config_items(cfg)}
        assert len(keys) == len(dataclasses.fields(ScenarioConfig))

    def test_items_round_trip_through_apply_key(self):
        cfg = preset("dispatch_adversity")
        rebuilt = preset("fig_dyn")
        for key, value in config_items(cfg):
            rebuilt = apply_key(rebuilt, key, value)
        assert rebuilt == cfg


class TestPresets:
    def test_names_and_unknown(self):
        assert set(PRESET_NAMES) == {
            "fig_dyn", "fig_dyn_logpenalty", "fig_fail", "fig_delay",
            "dispatch", "dispatch_uniform", "dispatch_adversity",
        }
        with pytest.raises(ConfigurationError, match="fig_dyn"):
            preset("fig_unknown")

    def test_fig_dyn_parameters(self):
        cfg = preset("fig_dyn")
        assert (cfg.n, cfg.total, cfg.eta, cfg.horizon) == (50, 200.0, 0.1, 3000)
        assert cfg.topology_kind == "cycle"
        assert cfg.topology_cycle_ps == (0.2, 0.1, 0.05, 0.01)
        assert cfg.topology_switch_period == 25
        assert cfg.node_kind == "log_quantizer"
        assert cfg.node_rho == 1.0 / 1024.0
        assert cfg.link_kind == "log_quantizer"
        assert cfg.link_rho == 1.0 / 8.0
        assert cfg.costs_kind == "quartic"
        assert cfg.costs_penalty == "box"
        assert (cfg.costs_box_lo, cfg.costs_box_hi) == (1.0, 10.0)
        assert cfg.costs_penalty_weight == 20.0

    def test_fig_dyn_cost_draws_within_declared_ranges(self):
        _, costs, _, _ = build_instance(preset("fig_dyn"))
        assert all(c.kind == "quartic" for c in costs)
        assert all(0.0 < c.p1 <= 0.02 for c in costs)
        assert all(0.0 < c.p2 <= 2.0 for c in costs)
        assert all(isinstance(c.penalty, BoxPenalty) for c in costs)

    def test_fig_dyn_logpenalty_sharpness(self):
        _, costs, _, _ = build_instance(preset("fig_dyn_logpenalty"))
        assert all(isinstance(c.penalty, SmoothLogPenalty) for c in costs)
        assert costs[0].penalty.sharpness == 5.0

    def test_fig_fail_parameters(self):
        cfg = preset("fig_fail")
        assert (cfg.eta, cfg.horizon, cfg.p_fail, cfg.window) == (0.2, 5000, 0.5, 4)
        assert cfg.node_kind == "identity" and cfg.link_kind == "identity"
        assert PRESET_SWEEPS["fig_fail"]["adversity.p_fail"] == (0.5, 0.7, 0.85, 0.92)

    def test_fig_delay_parameters(self):
        cfg = preset("fig_delay")
        assert (cfg.eta, cfg.tau_bar) == (0.5, 2)
        assert cfg.link_kind == "log_quantizer" and cfg.link_rho == 1.0 / 8.0
        assert PRESET_SWEEPS["fig_delay"]["adversity.tau_bar"] == (2, 4, 6)
        assert PRESET_SWEEPS["fig_delay"]["eta"] == (2.0, 0.5)

    def test_dispatch_parameters(self):
        cfg = preset("dispatch")
        assert (cfg.n, cfg.total) == (10, 600.0)
        assert (cfg.costs_box_lo, cfg.costs_box_hi) == (20.0, 110.0)
        assert cfg.costs_penalty_weight == 40.0
        assert cfg.costs_kind == "quadratic"

    def test_dispatch_uniform_is_symmetric(self):
        _, costs, _, _ = build_instance(preset("dispatch_uniform"))
        assert {(c.p1, c.p2) for c in costs} == {(0.4, 4.0)}

    def test_dispatch_adversity_parameters(self):
        cfg = preset("dispatch_adversity")
        assert (cfg.p_fail, cfg.tau_bar) == (0.5, 3)
        assert cfg.node_kind == "sign_power"
        assert cfg.link_kind == "log_quantizer"
        assert cfg.link_rho == 1.0 / 256.0


class TestBuildInstance:
    def test_er_topology_is_single_phase(self):
        graphs, costs, node_map, link_map = build_instance(small_static_config())
        assert len(graphs) == 1
        assert len(costs) == 10
        assert node_map.kind == "identity"

    def test_cycle_topology_has_one_graph_per_probability(self):
        graphs, _, _, _ = build_instance(preset("fig_dyn"))
        assert len(graphs) == 4
        counts = [g.edge_count for g in graphs]
        # denser phases first, matching the configured probability cycle
        assert counts[0] > counts[1] > counts[2] > counts[3]

    def test_explicit_edge_list_topology(self, tmp_path):
        g = erdos_renyi(10, 0.6, (0.5, 1.0), seed=2)
        path = tmp_path / "net.edges"
        path.write_text(to_edge_list(g))
        cfg = small_static_config(topology_kind="edges",
                                  topology_edges_file=str(path))
        graphs, _, _, _ = build_instance(cfg)
        assert len(graphs) == 1
        assert np.array_equal(graphs[0].weights, g.weights)

    def test_edges_kind_requires_file(self):
        cfg = small_static_config(topology_kind="edges")
        with pytest.raises(ConfigurationError):
            build_instance(cfg)

    def test_costs_from_csv(self, tmp_path):
        path = tmp_path / "costs.csv"
        rows = ["i,kind,p1,p2,p3,lo,hi"]
        rows += [f"{i},quadratic,{0.5 + 0.1 * i},1.0,0,," for i in range(10)]
        path.write_text("\n".join(rows) + "\n")
        cfg = small_static_config(costs_kind="csv", costs_csv=str(path))
        _, costs, _, _ = build_instance(cfg)
        assert costs[3].p1 == 0.8

    def test_seed_controls_topology(self):
        a, _, _, _ = build_instance(small_static_config(seed=1))
        b, _, _, _ = build_instance(small_static_config(seed=1))
        c, _, _, _ = build_instance(small_static_config(seed=2))
        assert np.array_equal(a[0].weights, b[0].weights)
        assert not np.array_equal(a[0].weights, c[0].weights)


class TestFailureMask:
    def test_no_failures_identity(self):
        g = erdos_renyi(20, 0.4, (0.5, 1.0), seed=5)
        rng = np.random.default_rng(0)
        assert np.array_equal(failure_mask(g, 0.0, rng).weights, g.weights)

    def test_full_failure_edgeless(self):
        g = erdos_renyi(20, 0.4, (0.5, 1.0), seed=5)
        rng = np.random.default_rng(0)
        assert failure_mask(g, 1.0, rng).edge_count == 0

    def test_retention_within_four_sigma(self):
        g = erdos_renyi(50, 0.2, (0.5, 1.0), seed=1)
        m = g.edge_count
        rng = np.random.default_rng(42)
        draws = 10_000 // m + 1
        kept = sum(failure_mask(g, 0.5, rng).edge_count for _ in range(draws))
        mean = draws * m * 0.5
        sd = math.sqrt(draws * m * 0.25)
        assert abs(kept - mean) <= 4.0 * sd

    def test_survivor_weights_unchanged(self):
        g = erdos_renyi(15, 0.5, (0.5, 1.0), seed=8)
        rng = np.random.default_rng(7)
        masked = failure_mask(g, 0.3, rng)
        ei, ej, w = masked.edges()
        assert np.array_equal(w, g.weights[ei, ej])

    def test_rejects_bad_probability(self):
        g = erdos_renyi(5, 0.9, (0.5, 1.0), seed=0)
        with pytest.raises(ConfigurationError):
            failure_mask(g, -0.1, np.random.default_rng(0))


class TestRun:
    def test_deterministic_traces(self):
        cfg = small_static_config(horizon=150, p_fail=0.3, tau_bar=2)
        a = run(cfg)
        b = run(cfg)
        assert trace_to_csv(a.trace) == trace_to_csv(b.trace)
        assert np.array_equal(a.final_state, b.final_state)

    def test_full_failure_freezes_states(self):
        cfg = small_static_config(horizon=60, p_fail=1.0)
        res = run(cfg)
        assert np.all(res.final_state == 2.0)
        residuals = {r.residual for r in res.trace}
        assert len(residuals) == 1
        assert all(r.active_links == 0 for r in res.trace)

    def test_fig_dyn_state_mean_constant(self):
        cfg = apply_key(preset("fig_dyn"), "horizon", 200)
        res = run(cfg)
        for rec in res.trace:
            assert rec.state_mean == pytest.approx(4.0, abs=1e-9)
        assert res.summary.final_residual < res.summary.initial_residual

    def test_feasibility_gap_within_tolerance_on_recorded_steps(self):
        cfg = small_static_config(horizon=300, p_fail=0.4, tau_bar=3, seed=9)
        res = run(cfg)
        tol = 1e-9 * (1.0 + abs(cfg.total)) * math.log2(cfg.n + 1)
        assert res.summary.max_feasibility_gap <= tol
        assert all(r.feasibility_gap <= tol for r in res.trace)

    def test_early_stop_at_equilibrium(self):
        # Identical costs from an equal split start exactly at equilibrium.
        cfg = small_static_config(costs_a_lo=1.0, costs_a_hi=1.0, horizon=500)
        res = run(cfg)
        assert res.summary.early_stopped
        assert res.summary.executed_steps == 0
        assert not res.summary.diverged

    def test_record_stride_and_terminal_record(self):
        cfg = small_static_config(horizon=100, record_stride=10,
                                  early_stop_spread=0.0)
        res = run(cfg)
        ks = [r.step for r in res.trace]
        assert ks == list(range(0, 101, 10))
        cfg2 = small_static_config(horizon=95, record_stride=10,
                                   early_stop_spread=0.0)
        ks2 = [r.step for r in run(cfg2).trace]
        assert ks2 == list(range(0, 95, 10)) + [95]

    def test_threshold_and_windows_on_converging_run(self):
        res = run(small_static_config())
        s = res.summary
        assert s.steps_to_threshold is not None
        assert 0 < s.steps_to_threshold <= s.executed_steps
        assert s.final_residual <= 0.01 * s.initial_residual
        assert s.fraction_decreasing_windows >= 0.95
        assert s.eta_bound_ratio is None

    def test_divergence_is_reported_not_raised(self):
        cfg = apply_key(apply_key(preset("fig_delay"), "eta", 2.0),
                        "adversity.tau_bar", 4)
        res = run(cfg)
        s = res.summary
        assert s.diverged
        assert s.diverged_step is not None
        assert s.diverged_step <= s.executed_steps
        assert s.eta_bound_ratio is not None and s.eta_bound_ratio > 1.0

    def test_mostly_decreasing_windows_at_half_bound(self):
        # Delay-free at eta well below the certified rate: residual windows
        # of length window + 1 decrease nearly always.
        cfg = small_static_config(horizon=600, seed=5)
        graphs, costs, node_map, link_map = build_instance(cfg)
        spec = spectral_summary(laplacian(graphs[0]))
        u = smoothness_bound(costs, (-10.0, 10.0)).u
        bound = step_rate_bound(node_map, link_map, spec.lambda2,
                                spec.lambda_max, u).eta_max
        res = run(apply_key(cfg, "eta", 0.5 * bound))
        assert res.summary.fraction_decreasing_windows >= 0.95

    def test_adversity_seed_isolates_failure_stream(self):
        base = small_static_config(horizon=120, p_fail=0.5)
        a = run(apply_key(base, "adversity.seed", 1))
        b = run(apply_key(base, "adversity.seed", 1))
        c = run(apply_key(base, "adversity.seed", 2))
        assert trace_to_csv(a.trace) == trace_to_csv(b.trace)
        assert trace_to_csv(a.trace) != trace_to_csv(c.trace)

    def test_adversity_seed_inert_without_adversity(self):
        base = small_static_config(horizon=120)
        a = run(apply_key(base, "adversity.seed", 1))
        c = run(apply_key(base, "adversity.seed", 2))
        assert trace_to_csv(a.trace) == trace_to_csv(c.trace)

    def test_dispatch_uniform_reaches_even_split(self):
        res = run(preset("dispatch_uniform"))
        assert np.all(np.abs(res.final_state - 60.0) <= 0.01)


class TestTraceSerialization:
    def test_csv_header_and_shape(self):
        res = run(small_static_config(horizon=50))
        text = trace_to_csv(res.trace)
        lines = text.strip().splitlines()
        assert lines[0] == ("k,residual,feasibility_gap,dispersion,"
                            "state_min,state_max,state_mean,active_links")
        assert len(lines) == len(res.trace) + 1
        first = lines[1].split(",")
        assert first[0] == "0"
        # floats print as shortest round-trip decimals
        assert float(first[1]) == res.trace[0].residual

    def test_summary_text_is_flat_key_value(self):
        res = run(small_static_config(horizon=50))
        text = summary_to_text(res.summary)
        lines = [ln for ln in text.strip().splitlines() if ln]
        assert all("=" in ln for ln in lines)
        keys = [ln.split("=")[0] for ln in lines]
        assert "final_residual" in keys
        assert "max_feasibility_gap" in keys
        assert "fraction_decreasing_windows" in keys


class TestScalingBenchmark:
    def test_fields_and_positivity(self):
        r = scaling_benchmark(sizes=(16, 32), steps=30, seed=1)
        assert r.sizes == (16, 32)
        assert len(r.seconds_per_step) == 2
        assert all(t > 0.0 for t in r.seconds_per_step)
        assert math.isfinite(r.slope)

    def test_constant_degree_variant_runs(self):
        r = scaling_benchmark(sizes=(16, 32), steps=30, seed=1,
                              constant_degree=6.0)
        assert all(t > 0.0 for t in r.seconds_per_step)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            scaling_benchmark(sizes=(), steps=30)
        with pytest.raises(ConfigurationError):
            scaling_benchmark(sizes=(16, 32), steps=0)
        with pytest.raises(ConfigurationError):
            scaling_benchmark(sizes=(16, 32), steps=30, density=0.0)
