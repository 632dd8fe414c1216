"""Command line front end.

Subcommands: run, preset, sweep, percolation, bounds, bench.  Exit codes:
0 success, 1 bad configuration or input, 2 run diverged, 3 numeric failure.
Existing output files are never overwritten unless --force is given.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .dynamics import max_delay_bound, step_rate_from_sector
from .errors import ConfigurationError, DraSimError, NumericError
from .graph import erdos_renyi, laplacian, spectral_summary, union_graph
from .mappings import first_order_sector_params, sector_params
from .objective import smoothness_bound
from .percolation import effective_failure, er_threshold, mc_union_connectivity, min_window
from .scenario import (
    CONFIG_KEYS,
    PRESET_NAMES,
    PRESET_SWEEPS,
    RunResult,
    ScenarioConfig,
    apply_key,
    build_instance,
    config_items,
    default_smoothness_domain,
    preset,
    run,
    scaling_benchmark,
    summary_to_text,
    trace_to_csv,
)

__all__ = ["main", "parse_config", "serialize_config"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_NUMERIC = 3

_TRUE_WORDS = frozenset(("true", "1", "yes", "on"))
_FALSE_WORDS = frozenset(("false", "0", "no", "off"))


# --------------------------------------------------------------------------
# config text format
# --------------------------------------------------------------------------


def _parse_value(key: str, raw: str, where: str):
    spec = CONFIG_KEYS[key]
    kind = spec.kind
    raw = raw.strip()
    try:
        if kind == "int":
            value = int(raw)
        elif kind == "float":
            value = float(raw)
        elif kind == "bool":
            low = raw.lower()
            if low in _TRUE_WORDS:
                value = True
            elif low in _FALSE_WORDS:
                value = False
            else:
                raise ValueError(f"expected a boolean, got {raw!r}")
        elif kind == "floats":
            value = tuple(float(part) for part in raw.split(",")) if raw else ()
        else:
            value = raw
    except ValueError as exc:
        raise ConfigurationError(f"{where}: bad value for {key}: {exc}") from None
    if spec.valid is not None and not spec.valid(value):
        raise ConfigurationError(f"{where}: {key} must be {spec.check}, got {raw!r}")
    return value


def _render_value(key: str, value) -> str:
    kind = CONFIG_KEYS[key].kind
    if kind == "float":
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def parse_config(text: str) -> ScenarioConfig:
    """Parse the flat ``key = value`` scenario format.

    Blank lines and ``#`` comments are skipped.  Unknown keys and malformed
    lines are reported with their line number.  Values follow each key's
    declared type; list-valued keys take comma separated floats.
    """
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, f"line {lineno}")
    kwargs = {CONFIG_KEYS[k].attr: v for k, v in values.items()}
    return ScenarioConfig(**kwargs)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Render a config so that ``parse_config`` reproduces it exactly."""
    lines = ["# dra-sim scenario"]
    lines.extend(f"{key} = {_render_value(key, value)}" for key, value in config_items(cfg))
    return "\n".join(lines) + "\n"


def _apply_sets(cfg: ScenarioConfig, assignments: list[str]) -> ScenarioConfig:
    for item in assignments:
        if "=" not in item:
            raise ConfigurationError(f"--set needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"--set {item!r}: unknown config key {key!r}")
        cfg = apply_key(cfg, key, _parse_value(key, raw, f"--set {item!r}"))
    return cfg


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "preset", None):
        cfg = preset(args.preset)
    elif getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        cfg = parse_config(path.read_text())
    else:
        raise ConfigurationError("give either --config FILE or --preset NAME")
    return _apply_sets(cfg, args.set or [])


def _write_text(path: str, text: str, force: bool) -> None:
    target = Path(path)
    if target.exists() and not force:
        raise ConfigurationError(f"{target} exists; pass --force to overwrite")
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _emit_run_outputs(result: RunResult, args) -> int:
    if args.trace:
        _write_text(args.trace, trace_to_csv(result.trace), args.force)
    text = summary_to_text(result.summary)
    if args.summary:
        _write_text(args.summary, text, args.force)
    sys.stdout.write(text)
    return EXIT_DIVERGED if result.summary.diverged else EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    return _emit_run_outputs(run(cfg), args)


def _cmd_preset(args) -> int:
    if args.list:
        for name in PRESET_NAMES:
            sweeps = PRESET_SWEEPS.get(name)
            extra = ""
            if sweeps:
                extra = "  sweeps: " + "; ".join(
                    f"{k} in {{{', '.join(map(str, vs))}}}" for k, vs in sweeps.items()
                )
            sys.stdout.write(f"{name}{extra}\n")
        return EXIT_OK
    if not args.name:
        raise ConfigurationError("give a preset name or --list")
    cfg = _apply_sets(preset(args.name), args.set or [])
    text = serialize_config(cfg)
    if args.write:
        _write_text(args.write, text, args.force)
    if args.run:
        return _emit_run_outputs(run(cfg), args)
    if not args.write:
        sys.stdout.write(text)
    return EXIT_OK


def _sweep_worker(job: tuple[int, ScenarioConfig, str, str]) -> tuple[int, bool, str, str]:
    index, cfg, trace_path, summary_path = job
    try:
        result = run(cfg)
        Path(trace_path).write_text(trace_to_csv(result.trace))
        Path(summary_path).write_text(summary_to_text(result.summary))
        return index, result.summary.diverged, "", ""
    except NumericError as exc:
        return index, False, "numeric", str(exc)
    except DraSimError as exc:
        return index, False, "config", str(exc)


def _worker_cap(n_jobs: int) -> int:
    raw = os.environ.get("DRA_SIM_THREADS", "")
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigurationError(f"DRA_SIM_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise ConfigurationError(f"DRA_SIM_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(n_jobs, cap))


def _cmd_sweep(args) -> int:
    base = _load_config(args)
    grids: list[tuple[str, tuple]] = []
    if args.sweep:
        for item in args.sweep:
            if "=" not in item:
                raise ConfigurationError(f"--sweep needs key=v1,v2,..., got {item!r}")
            key, _, raw = item.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"--sweep {item!r}: unknown config key {key!r}")
            vals = tuple(
                _parse_value(key, part, f"--sweep {item!r}") for part in raw.split(",") if part.strip()
            )
            if not vals:
                raise ConfigurationError(f"--sweep {item!r}: no values")
            grids.append((key, vals))
    elif args.preset and args.preset in PRESET_SWEEPS:
        grids = [(k, vs) for k, vs in PRESET_SWEEPS[args.preset].items()]
    if not grids:
        raise ConfigurationError("nothing to sweep: pass --sweep key=v1,v2 or a preset with a grid")

    out_dir = Path(args.out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise ConfigurationError(f"{out_dir} is not empty; pass --force to reuse it")
    out_dir.mkdir(parents=True, exist_ok=True)

    keys = [k for k, _ in grids]
    jobs = []
    labels = []
    for index, combo in enumerate(itertools.product(*(vs for _, vs in grids))):
        cfg = base
        for key, value in zip(keys, combo):
            cfg = apply_key(cfg, key, value)
        label = ";".join(f"{k}={_render_value(k, v)}" for k, v in zip(keys, combo))
        labels.append(label)
        jobs.append(
            (index, cfg, str(out_dir / f"trace_{index:03d}.csv"), str(out_dir / f"summary_{index:03d}.txt"))
        )

    workers = _worker_cap(len(jobs))
    results: dict[int, tuple[bool, str, str]] = {}
    if workers == 1:
        for job in jobs:
            index, diverged, kind, msg = _sweep_worker(job)
            results[index] = (diverged, kind, msg)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, diverged, kind, msg in pool.map(_sweep_worker, jobs):
                results[index] = (diverged, kind, msg)

    lines = ["job,overrides,diverged,error"]
    any_diverged = any_config = any_numeric = False
    for index in range(len(jobs)):
        diverged, kind, msg = results[index]
        any_diverged |= diverged
        any_config |= kind == "config"
        any_numeric |= kind == "numeric"
        err = f"{kind}: {msg}" if kind else ""
        lines.append(f'{index:03d},"{labels[index]}",{str(diverged).lower()},"{err}"')
        sys.stdout.write(f"job {index:03d} [{labels[index]}] " + (err or ("diverged" if diverged else "ok")) + "\n")
    (out_dir / "sweep_summary.csv").write_text("\n".join(lines) + "\n")
    if any_numeric:
        return EXIT_NUMERIC
    if any_config:
        return EXIT_CONFIG
    if any_diverged:
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_percolation(args) -> int:
    profile = er_threshold(args.n, args.p, convention=args.convention)
    out = [
        ("n", args.n),
        ("p", repr(float(args.p))),
        ("mean_degree", repr(profile.mean_degree)),
        ("threshold", "none" if profile.threshold is None else repr(profile.threshold)),
        ("convention", profile.convention),
    ]
    if profile.warning:
        out.append(("warning", profile.warning))
    if args.p_fail > 0.0:
        out.append(("p_fail", repr(float(args.p_fail))))
        out.append(("window", args.window))
        out.append(("effective_failure", repr(effective_failure(args.p_fail, args.window))))
        if profile.threshold is not None:
            out.append(("min_window", min_window(args.p_fail, profile.threshold)))
    if args.trials > 0:
        base = erdos_renyi(args.n, args.p, seed=args.seed)
        mc = mc_union_connectivity(base, args.p_fail, args.window, trials=args.trials, seed=args.seed)
        out.append(("mc_fraction", repr(mc.fraction)))
        out.append(("mc_wilson_low", repr(mc.wilson_low)))
        out.append(("mc_wilson_high", repr(mc.wilson_high)))
        out.append(("mc_trials", mc.trials))
    sys.stdout.write("\n".join(f"{k}={v}" for k, v in out) + "\n")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = _load_config(args)
    graphs, costs, node_map, link_map = build_instance(cfg)
    overrides = (args.lambda2, args.lambda_max, args.u)
    if any(v is not None for v in overrides):
        if any(v is None for v in overrides):
            raise ConfigurationError("--lambda2, --lambda-max, and --u must be given together")
        lam2, lam_max, u = overrides
        connected = lam2 > 0.0
        out = [("lambda2", repr(float(lam2))), ("lambda_max", repr(float(lam_max))), ("connected", str(connected).lower())]
    else:
        spec = spectral_summary(laplacian(union_graph(graphs)))
        lam2, lam_max, connected = spec.lambda2, spec.lambda_max, spec.connected
        if args.domain:
            parts = args.domain.split(",")
            if len(parts) != 2:
                raise ConfigurationError(f"--domain needs lo,hi, got {args.domain!r}")
            domain = (float(parts[0]), float(parts[1]))
        else:
            domain = default_smoothness_domain(cfg)
        smooth = smoothness_bound(costs, domain)
        u = smooth.u
        out = [
            ("lambda2", repr(lam2)),
            ("lambda_max", repr(lam_max)),
            ("connected", str(connected).lower()),
            ("domain_lo", repr(float(domain[0]))),
            ("domain_hi", repr(float(domain[1]))),
        ]
    kn, bn = sector_params(node_map)
    kl, bl = sector_params(link_map)
    fn = first_order_sector_params(node_map)
    fl = first_order_sector_params(link_map)
    out += [
        ("u", repr(float(u))),
        ("kappa_node", repr(kn)),
        ("big_k_node", repr(bn)),
        ("kappa_link", repr(kl)),
        ("big_k_link", repr(bl)),
        ("window", cfg.window),
        ("tau_bar", cfg.tau_bar),
    ]
    if connected:
        eta_max = step_rate_from_sector(
            kn, bn, kl, bl, lam2, lam_max, u, window=cfg.window, tau_bar=cfg.tau_bar
        )
        eta_max_first_order = step_rate_from_sector(
            fn[0], fn[1], fl[0], fl[1], lam2, lam_max, u, window=cfg.window, tau_bar=cfg.tau_bar
        )
        budget = max_delay_bound(node_map, link_map, lam2, lam_max, u, cfg.window, cfg.eta)
        out.append(("eta_max", repr(eta_max)))
        out.append(("eta_max_first_order", repr(eta_max_first_order)))
        out.append(("eta", repr(float(cfg.eta))))
        out.append(("eta_ratio", repr(float(cfg.eta) / eta_max)))
        out.append(("max_delay_budget", repr(budget)))
    else:
        out.append(("eta_max", "none"))
        out.append(("note", "union graph disconnected; no contraction bound exists"))
    sys.stdout.write("\n".join(f"{k}={v}" for k, v in out) + "\n")
    return EXIT_OK


def _cmd_bench(args) -> int:
    sizes = tuple(int(part) for part in args.sizes.split(",") if part.strip())
    result = scaling_benchmark(
        sizes, steps=args.steps, density=args.density, seed=args.seed, constant_degree=args.degree
    )
    for n, t in zip(result.sizes, result.seconds_per_step):
        sys.stdout.write(f"n={n} seconds_per_step={repr(t)}\n")
    sys.stdout.write(f"slope={repr(result.slope)}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; route usage problems through
    # the config-error path so exit 2 stays reserved for divergence.
    def error(self, message: str):
        raise ConfigurationError(message)


def _add_config_source(p: argparse.ArgumentParser, with_preset: bool = True) -> None:
    p.add_argument("--config", help="scenario config file")
    if with_preset:
        p.add_argument("--preset", help="named preset to start from")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dra-sim", description="Resilient distributed resource allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    _add_config_source(p_run)
    p_run.add_argument("--trace", help="write the trace CSV here")
    p_run.add_argument("--summary", help="write the summary text here")
    p_run.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="print, write, or run a named preset")
    p_preset.add_argument("name", nargs="?", help="preset name")
    p_preset.add_argument("--list", action="store_true", help="list available presets")
    p_preset.add_argument("--write", help="write the preset config here")
    p_preset.add_argument("--run", action="store_true", help="execute the preset")
    p_preset.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p_preset.add_argument("--trace", help="write the trace CSV here (with --run)")
    p_preset.add_argument("--summary", help="write the summary text here (with --run)")
    p_preset.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p_preset.set_defaults(func=_cmd_preset)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid in parallel")
    _add_config_source(p_sweep)
    p_sweep.add_argument("--sweep", action="append", metavar="KEY=V1,V2,...", help="values to sweep")
    p_sweep.add_argument("--out-dir", required=True, help="directory for per-job traces and summaries")
    p_sweep.add_argument("--force", action="store_true", help="reuse a non-empty output directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_perc = sub.add_parser("percolation", help="connectivity thresholds under link failures")
    p_perc.add_argument("--n", type=int, required=True)
    p_perc.add_argument("--p", type=float, required=True, help="base link probability")
    p_perc.add_argument("--p-fail", type=float, default=0.0)
    p_perc.add_argument("--window", type=int, default=0)
    p_perc.add_argument("--convention", choices=("half", "standard"), default="half")
    p_perc.add_argument("--trials", type=int, default=0, help="Monte Carlo trials (0 skips)")
    p_perc.add_argument("--seed", type=int, default=0)
    p_perc.set_defaults(func=_cmd_percolation)

    p_bounds = sub.add_parser("bounds", help="spectral, smoothness, and step-rate bounds of a scenario")
    _add_config_source(p_bounds)
    p_bounds.add_argument("--domain", help="lo,hi interval for the curvature scan")
    p_bounds.add_argument("--lambda2", type=float, help="use this algebraic connectivity instead of building the graph")
    p_bounds.add_argument("--lambda-max", type=float, help="use this largest eigenvalue")
    p_bounds.add_argument("--u", type=float, help="use this smoothness constant")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_bench = sub.add_parser("bench", help="per-step cost versus network size")
    p_bench.add_argument("--sizes", default="50,100,200,400")
    p_bench.add_argument("--steps", type=int, default=200)
    p_bench.add_argument("--density", type=float, default=1.0)
    p_bench.add_argument("--degree", type=float, help="fix the expected degree instead of the density")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC
    except DraSimError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
