"""Command-line surface: run scenarios, experiments, the live bridge,
and plot-data export."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config_io import ConfigError, load_scenario, serialize_scenario
from .engine import SimTrace, performance_indices, run_closed_loop
from .experiments import (
    experiment_awareness,
    experiment_horizon_sweep,
    experiment_prediction_impact,
)


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("AWAREPLAN_OUTDIR", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dump_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def trace_to_csv(trace: SimTrace, path: Path) -> None:
    """Flat per-tick scalars; distributions stay in the JSON export."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "x_h", "y_h", "x_r", "y_r", "u_h_x", "u_h_y",
                    "u_r_x", "u_r_y", "belief_p", "max_p_coll", "feasible",
                    "wall_ms"])
        for r in trace.records:
            w.writerow([r.t, *r.x_h, *r.x_r, *r.u_h, *r.u_r, r.belief_p,
                        max(r.p_coll) if len(r.p_coll) else 0.0,
                        int(r.feasible), round(r.wall_ms, 3)])


def _load(args) -> "ScenarioConfig":
    config = load_scenario(args.scenario)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def cmd_run(args) -> int:
    config = _load(args)
    trace = run_closed_loop(config)
    pi_r, pi_h, pi_t = performance_indices(trace)
    out = _out_dir(args)
    json_path = out / (args.out or f"{config.name}-seed{config.seed}-trace.json")
    _dump_json(trace.to_json_dict(), json_path)
    trace_to_csv(trace, json_path.with_suffix(".csv"))
    print(f"{config.name}: {len(trace.records)} ticks ({trace.stop_reason}), "
          f"PI_R={pi_r:.3f} PI_H={pi_h:.3f} PI_T={pi_t:.3f}, "
          f"min distance {trace.min_distance():.3f} m")
    print(f"trace written to {json_path}")
    return 0


def cmd_sweep(args) -> int:
    horizons = [int(h) for h in args.horizons.split(",")]
    config = _load(args)
    report = experiment_horizon_sweep(horizons, config)
    out = _out_dir(args)
    _dump_json(report, out / (args.out or f"{config.name}-sweep.json"))
    header = f"{'mode':>14} {'N_R':>4} {'PI_R':>10} {'PI_H':>10} {'PI_T':>10} {'PI_T/base':>10}"
    print(header)
    for row in report["rows"]:
        print(f"{row['mode']:>14} {row['n_r']:>4} {row['pi_r']:>10.2f} "
              f"{row['pi_h']:>10.2f} {row['pi_t']:>10.2f} {row['pi_t_normalized']:>10.4f}")
    return 0


def cmd_compare(args) -> int:
    config = _load(args)
    report, pred, nonpred = experiment_prediction_impact(config)
    out = _out_dir(args)
    _dump_json(report, out / (args.out or f"{config.name}-compare.json"))
    _dump_json(pred.to_json_dict(), out / f"{config.name}-predictive-trace.json")
    _dump_json(nonpred.to_json_dict(), out / f"{config.name}-nonpredictive-trace.json")
    for mode in ("predictive", "nonpredictive"):
        s = report[mode]
        print(f"{mode:>14}: PI_T={s['pi_t']:.2f} width={s['widths']['mean_display_support']:.2f} "
              f"min_dist={s['min_distance']:.2f} ticks={s['ticks']}")
    print(f"PI_T ordering holds: {report['pi_t_ordering_holds']}; "
          f"width ordering holds: {report['width_ordering_holds']}")
    return 0


def cmd_aware(args) -> int:
    config = _load(args)
    report, trace = experiment_awareness(args.beta, config)
    out = _out_dir(args)
    _dump_json(report, out / (args.out or f"{config.name}-aware-beta{args.beta}.json"))
    print(f"true_beta={args.beta}: PI_R={report['pi_r']:.2f} "
          f"final_belief={report['final_belief']:.4f} "
          f"min_dist={report['min_distance']:.3f} ticks={report['ticks']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .bridge import create_app
    from .scenario import EXTERNAL

    config = _load(args)
    config = replace(config, human_control=EXTERNAL)
    app = create_app(config, tick_hz=args.tick_hz)
    print(f"serving {config.name} on ws://{args.host}:{args.port}/ws")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_plot(args) -> int:
    """Emit plot-ready data (trajectory polylines + heatmap frames) from a
    trace file; optionally render a PNG when matplotlib is available."""
    trace_path = Path(args.trace)
    if not trace_path.exists():
        print(f"trace file not found: {trace_path}", file=sys.stderr)
        return 1
    data = json.loads(trace_path.read_text())
    ticks = data["ticks"]
    payload = {
        "human_path": [t["x_h"] for t in ticks] + (
            [data["final_x_h"]] if data.get("final_x_h") else []),
        "robot_path": [t["x_r"] for t in ticks] + (
            [data["final_x_r"]] if data.get("final_x_r") else []),
        "human_goal": data["config"]["human"]["goal"],
        "robot_goal": data["config"]["robot"]["goal"],
        "grid": data["config"]["grid"],
        "belief_series": [t["belief_p"] for t in ticks],
        "heatmaps": [{"t": t["t"], "steps": t["heatmap"]} for t in ticks],
    }
    out = _out_dir(args)
    out_path = out / (args.out or (trace_path.stem + "-plotdata.json"))
    _dump_json(payload, out_path)
    print(f"plot data written to {out_path}")
    if args.png:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            print("matplotlib not installed; skipping PNG render", file=sys.stderr)
            return 1
        import numpy as np
        fig, ax = plt.subplots(figsize=(6, 6))
        hp = np.array(payload["human_path"])
        rp = np.array(payload["robot_path"])
        ax.plot(hp[:, 0], hp[:, 1], "-o", ms=2, label="human")
        ax.plot(rp[:, 0], rp[:, 1], "-s", ms=2, label="robot")
        ax.plot(*payload["human_goal"], "g*", ms=12)
        ax.plot(*payload["robot_goal"], "r*", ms=12)
        ax.set_aspect("equal")
        ax.legend()
        png_path = out_path.with_suffix(".png")
        fig.savefig(png_path, dpi=120)
        print(f"rendered {png_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="awareplan",
        description="Human-aware robot action planning: simulation and experiments")
    p.add_argument("--out-dir", default=None,
                   help="output directory (default: $AWAREPLAN_OUTDIR or .)")
    sub = p.add_subparsers(dest="command", required=True)

    def add_scenario_args(sp):
        sp.add_argument("--scenario", default="sec4-desk",
                        help="preset name or config JSON path")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output file name")

    sp = sub.add_parser("run", help="run one closed-loop episode")
    add_scenario_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="horizon sweep with normalized indices")
    add_scenario_args(sp)
    sp.add_argument("--horizons", default="1,3,5,7,9")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="predictive vs non-predictive human")
    add_scenario_args(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("aware", help="awareness comparison episode")
    add_scenario_args(sp)
    sp.add_argument("--beta", type=int, choices=(0, 1), required=True)
    sp.set_defaults(func=cmd_aware)

    sp = sub.add_parser("serve", help="interactive WebSocket bridge")
    add_scenario_args(sp)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8700)
    sp.add_argument("--tick-hz", type=float, default=None,
                    help="override wall-clock tick rate (default 1/dt)")
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("plot", help="emit plot-ready data from a trace")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--png", action="store_true")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
