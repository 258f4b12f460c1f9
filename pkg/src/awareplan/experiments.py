"""Canned experiment protocols over the scenario library.

Three studies mirror the qualitative claims this planner is built
around: removing the human's predictive reasoning hurts both agents and
widens the predicted-state distributions; the robot's horizon trades
late reactions against compounding prediction uncertainty, with a sweet
spot in between; and an unconcerned human measurably costs the robot
path efficiency compared to a concerned one.

Only orderings are meaningful here. Absolute index values depend on
timestep, grid and solver choices that published work rarely pins down,
so every report carries raw numbers but the headline claims are
comparisons.
"""

from __future__ import annotations

import numpy as np

from .engine import SimTrace, performance_indices, run_closed_loop
from .scenario import PRESETS, ScenarioConfig

# Ticks with the agents closer than this contribute to the reported
# prediction-width statistics: distribution width matters where the
# agents actually interact.
INTERACTION_RADIUS = 3.0


def _width_stats(trace: SimTrace, radius: float = INTERACTION_RADIUS) -> dict:
    counts, spreads = [], []
    for rec in trace.records:
        if float(np.hypot(*(rec.x_h - rec.x_r))) > radius:
            continue
        counts.extend(rec.display_counts)
        for hm in rec.heatmap:
            if not hm:
                continue
            arr = np.array(hm)
            m, c = arr[:, 2], arr[:, :2]
            mu = (c * m[:, None]).sum(0) / m.sum()
            spreads.append(float(np.sqrt((m * ((c - mu) ** 2).sum(1)).sum() / m.sum())))
    return {
        "mean_display_support": float(np.mean(counts)) if counts else 0.0,
        "mean_cell_spread": float(np.mean(spreads)) if spreads else 0.0,
    }


def _cells_shared(trace: SimTrace) -> bool:
    cfg = trace.config["grid"]
    origin = np.array(cfg["origin"])
    cs = cfg["cell_size"]
    h, r = trace.human_states(), trace.robot_states()
    hc = np.floor((h - origin) / cs).astype(int)
    rc = np.floor((r - origin) / cs).astype(int)
    return bool(np.any(np.all(hc == rc, axis=1)))


def _summary(trace: SimTrace) -> dict:
    pi_r, pi_h, pi_t = performance_indices(trace)
    return {
        "pi_r": pi_r, "pi_h": pi_h, "pi_t": pi_t,
        "ticks": len(trace.records),
        "stop_reason": trace.stop_reason,
        "min_distance": trace.min_distance(),
        "cells_shared": _cells_shared(trace),
        "final_belief": float(trace.belief_series()[-1]),
        "widths": _width_stats(trace),
    }


def experiment_prediction_impact(config: ScenarioConfig | None = None) -> dict:
    """Same scenario with a predictive (N_H = N_R = 5) and a
    non-predictive (N_H = 0) human; reports both runs side by side."""
    base = config if config is not None else PRESETS["sec4-desk"]
    predictive = run_closed_loop(base.with_horizons(5, 5))
    nonpredictive = run_closed_loop(base.with_horizons(0, 5))
    report = {
        "scenario": base.name,
        "predictive": _summary(predictive),
        "nonpredictive": _summary(nonpredictive),
    }
    report["pi_t_ordering_holds"] = (
        report["predictive"]["pi_t"] < report["nonpredictive"]["pi_t"])
    report["width_ordering_holds"] = (
        report["predictive"]["widths"]["mean_display_support"]
        < report["nonpredictive"]["widths"]["mean_display_support"])
    return report, predictive, nonpredictive


def experiment_horizon_sweep(horizons=(1, 3, 5, 7, 9),
                             config: ScenarioConfig | None = None) -> dict:
    """PI table over robot horizons, for a non-predictive human (N_H = 0)
    and a predictive one (N_H = N_R), normalized by the non-predictive
    N_R = 1 row."""
    if not horizons or any(n < 1 for n in horizons):
        raise ValueError("horizons must be a non-empty list of positive integers")
    base = config if config is not None else PRESETS["sec4-desk"]
    rows = []
    for mode in ("nonpredictive", "predictive"):
        for n_r in horizons:
            n_h = n_r if mode == "predictive" else 0
            trace = run_closed_loop(base.with_horizons(n_h, n_r))
            s = _summary(trace)
            rows.append({"mode": mode, "n_r": int(n_r), **s})
    base_row = next(r for r in rows
                    if r["mode"] == "nonpredictive" and r["n_r"] == min(horizons))
    for r in rows:
        for key in ("pi_r", "pi_h", "pi_t"):
            r[f"{key}_normalized"] = r[key] / base_row[key]
    return {"scenario": base.name, "horizons": [int(n) for n in horizons], "rows": rows}


def experiment_awareness(true_beta: int, config: ScenarioConfig | None = None) -> dict:
    """One crossing episode with the given true awareness coefficient."""
    if true_beta not in (0, 1):
        raise ValueError("true_beta must be 0 or 1")
    base = config if config is not None else PRESETS["sec5-desk"]
    trace = run_closed_loop(base.with_true_beta(true_beta))
    s = _summary(trace)
    return {
        "scenario": base.name,
        "true_beta": int(true_beta),
        **s,
        "belief_series": [float(b) for b in trace.belief_series()],
    }, trace
