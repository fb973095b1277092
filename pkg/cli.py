import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config.settings import settings
from src.errors import ConfigurationError, FdMacError


def setup_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(settings.LOG_FILE),
            logging.StreamHandler()
        ]
    )


logger = logging.getLogger(__name__)


def _overrides(pairs: Optional[List[str]]) -> dict:
    """KEY=VALUE pairs from repeated --set flags."""
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise FdMacError(f"--set expects KEY=VALUE, got '{pair}'")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _load(args):
    from src.model.scenario import load_scenario

    return load_scenario(args.config, overrides=_overrides(args.set))


def cmd_validate(args) -> int:
    from src.experiments.validation import format_report, validate

    report = validate(args.config)
    print(format_report(report))
    return 0 if report.ok else 1


def cmd_analyze(args) -> int:
    from src.analysis import normalized_throughput
    from src.experiments.reporting import ResultTable, analysis_values
    from src.sensing import ClosedFormSensing

    cfg = _load(args)
    sensing = ClosedFormSensing.calibrated(cfg)
    report = normalized_throughput(cfg, sensing=sensing, backend=args.backend, samples=args.samples,
                                   seed=args.seed, workers=args.workers, offset_nodes=args.offset_nodes,
                                   show_progress=settings.SHOW_PROGRESS)
    print("\n" + "=" * 60)
    print(f"✅ NT = {report.normalized_throughput:.6f} bits/s/Hz ({report.backend})")
    print(f"   standard error {report.standard_error:.2e}, relative error {report.integration_error_estimate:.2e}")
    if report.calibration is not None:
        print(f"   eps_fd = {report.calibration.threshold_fd:.6g}, eps_hd = {report.calibration.threshold_hd:.6g}")
    print("=" * 60 + "\n")
    if args.out:
        table = ResultTable()
        table.add_row(cfg, "analysis", analysis_values(report))
        table.write_csv(args.out)
    return 0


def cmd_simulate(args) -> int:
    from src.experiments.reporting import ResultTable, simulation_values
    from src.sensing import ClosedFormSensing
    from src.simulator import run_fd, run_hd, run_replications

    cfg = _load(args)
    seed = settings.SEED if args.seed is None else args.seed
    seeds = [seed + r for r in range(args.replications)]
    if args.variant == "fd":
        sensing = ClosedFormSensing.calibrated(cfg)
        runs = run_replications(lambda s: run_fd(cfg, sensing, horizon=args.horizon, seed=s), seeds, args.workers)
        sensing_time = None
    else:
        sensing_time = args.sensing_time
        sensing = ClosedFormSensing.half_duplex_only(cfg, sensing_time)
        runs = run_replications(
            lambda s: run_hd(cfg, sensing, sensing_time=sensing_time, horizon=args.horizon, seed=s),
            seeds, args.workers,
        )
    values = simulation_values(runs, sensing_time)
    print("\n" + "=" * 60)
    print(f"✅ {args.variant.upper()} simulated NT = {values['normalized_throughput']:.6f} bits/s/Hz "
          f"over {len(runs)} run(s)")
    print(f"   standard error {values['standard_error']:.2e}, collisions {values['collisions']}, "
          f"missed detections {values['missed_detections']}")
    print("=" * 60 + "\n")
    if args.out:
        table = ResultTable()
        table.add_row(cfg, f"simulation_{args.variant}", values)
        table.write_csv(args.out)
    return 0


def _value_list(text: Optional[str], parse) -> Optional[list]:
    if not text:
        return None
    try:
        return [parse(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigurationError([f"search values: {e}"]) from e


def cmd_optimize(args) -> int:
    from src.experiments.reporting import optimization_table
    from src.model.units import linear_to_db, parse_duration, parse_power
    from src.optimizer import optimize

    cfg = _load(args)
    result = optimize(cfg, w_candidates=_value_list(args.w_values, int),
                      t_values=_value_list(args.t_values, parse_duration),
                      p_values=_value_list(args.p_values, parse_power),
                      full_w_range=args.full_w_range, workers=args.workers)
    print("\n" + "=" * 60)
    print(f"✅ W* = {result.best_w}, T* = {result.best_fragment_time * 1e3:.3f} ms, "
          f"P_s* = {linear_to_db(result.best_tx_power):.2f} dB")
    print(f"   NT* = {result.best_throughput:.6f} bits/s/Hz ({len(result.search_trace)} evaluations)")
    if result.final_report is not None:
        print(f"   re-evaluated NT = {result.final_report.normalized_throughput:.6f} "
              f"(se {result.final_report.standard_error:.2e})")
    print("=" * 60 + "\n")
    if args.out:
        optimization_table(cfg, result).write_csv(args.out)
    return 0


def cmd_sweep(args) -> int:
    from src.experiments.sweep import parse_sweep_values, run_preset, run_sweep
    from src.schemas import SweepSpec

    options = {"replications": args.replications, "horizon": args.horizon}
    if args.preset:
        table = run_preset(args.preset, args.out, config_path=args.config, seed=args.seed,
                           workers=args.workers, wall_time=args.wall_time, **options)
    else:
        if not args.param:
            raise FdMacError("sweep needs --param (or --preset)")
        try:
            values = parse_sweep_values(args.param, (args.values or "").split(","))
        except (KeyError, ValueError) as e:
            raise ConfigurationError([f"sweep values: {e}"]) from e
        sweep = SweepSpec(swept_parameter=args.param, values=values,
                          fixed_overrides=_overrides(args.set), mode=args.mode)
        protocols = tuple(p.strip() for p in args.protocols.split(",") if p.strip())
        table = run_sweep(args.config, sweep, seed=args.seed, workers=args.workers,
                          wall_time=args.wall_time, protocols=protocols, **options)
        table.mark_curve_maxima()
        table.write_csv(args.out)
    print(table.generate_report())
    print(f"✅ {len(table.rows)} rows written to {args.out}")
    return 0


def cmd_crossval(args) -> int:
    from src.experiments.crossval import crossval, crossval_frame, crossval_grid

    seed = settings.SEED if args.seed is None else args.seed
    seeds = [seed + r for r in range(args.replications)]
    base = _load(args)
    scenarios = crossval_grid(base) if args.grid else [("scenario", base)]

    results = []
    for label, cfg in scenarios:
        result = crossval(cfg, seeds=seeds, horizon=args.horizon, workers=args.workers, samples=args.samples)
        marker = "✅" if result.agrees else "❌"
        print(f"{marker} {label}: analysis {result.analysis_throughput:.5f}, "
              f"simulation {result.simulated_throughput:.5f} ± {result.simulated_standard_error:.5f} "
              f"({result.relative_difference:.2%})")
        results.append((label, cfg, result))

    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        crossval_frame(results).to_csv(args.out, index=False, lineterminator="\n", float_format="%.12g")
    return 0 if all(result.agrees for _, _, result in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Full-duplex cognitive MAC analysis and simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_overrides: bool = True):
        p.add_argument("--config", type=str, help="Scenario file (KEY=VALUE lines)")
        p.add_argument("--seed", type=int, help=f"Random seed (default {settings.SEED})")
        p.add_argument("--workers", type=int, help="Worker threads (default: WORKERS environment variable)")
        if scenario_overrides:
            p.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a scenario key")

    p = sub.add_parser("validate", help="Check a scenario and print derived quantities")
    p.add_argument("--config", type=str, help="Scenario file (KEY=VALUE lines)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="Analytical normalized throughput")
    common(p)
    p.add_argument("--backend", choices=["monte_carlo", "quadrature"], help="Integration backend")
    p.add_argument("--samples", type=int, help="Monte Carlo samples")
    p.add_argument("--offset-nodes", type=int, help="Spline nodes over the backoff overhead (0 = exact)")
    p.add_argument("--out", type=str, help="Write a one-row CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Discrete-event simulation")
    common(p)
    p.add_argument("--variant", choices=["fd", "hd"], default="fd", help="Protocol variant")
    p.add_argument("--horizon", type=float, default=100.0, help="Simulated seconds per run")
    p.add_argument("--replications", type=int, default=1, help="Independent runs")
    p.add_argument("--sensing-time", type=float, default=1e-3, help="HD sensing time T_S (s)")
    p.add_argument("--out", type=str, help="Write a one-row CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="Search (W, T, P_s) for the largest throughput")
    common(p)
    p.add_argument("--full-w-range", action="store_true", help="Try every W in [1, W_max]")
    p.add_argument("--w-values", type=str, help="Comma-separated contention windows")
    p.add_argument("--t-values", type=str, help="Comma-separated fragment times, units required")
    p.add_argument("--p-values", type=str, help="Comma-separated transmit powers instead of the power search")
    p.add_argument("--out", type=str, help="Write the search trace and the optimum as CSV")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="Parameter sweep or preset to CSV")
    common(p)
    p.add_argument("--param", type=str, help="Swept scenario key")
    p.add_argument("--values", type=str, help="Comma-separated values, units allowed")
    p.add_argument("--mode", choices=["analysis", "simulation", "both", "optimize"], default="analysis")
    p.add_argument("--preset", choices=["window", "fragment_power", "network_size", "fd_vs_hd"], help="Run a sweep preset")
    p.add_argument("--protocols", type=str, default="fd", help="Simulated protocols: fd, hd or fd,hd")
    p.add_argument("--horizon", type=float, default=100.0, help="Simulated seconds per run")
    p.add_argument("--replications", type=int, default=5, help="Simulation runs per point")
    p.add_argument("--wall-time", action="store_true", help="Add a wall-time column")
    p.add_argument("--out", type=str, required=True, help="Output CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("crossval", help="Analysis against simulation")
    common(p)
    p.add_argument("--grid", action="store_true", help="Run the n0 x K x xi scenario grid")
    p.add_argument("--horizon", type=float, default=100.0, help="Simulated seconds per run")
    p.add_argument("--replications", type=int, default=5, help="Simulation runs per scenario")
    p.add_argument("--samples", type=int, help="Monte Carlo samples of the analysis")
    p.add_argument("--out", type=str, help="Output CSV")
    p.set_defaults(func=cmd_crossval)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        return args.func(args)
    except FdMacError as e:
        violations = getattr(e, "violations", None)
        if violations:
            print(f"❌ {len(violations)} problem(s):")
            for violation in violations:
                print(f"   - {violation}")
        else:
            print(f"❌ {e}")
        return 1
    except KeyboardInterrupt:
        print("\n⚠️ Interrupted")
        return 130
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        print(f"❌ Error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
