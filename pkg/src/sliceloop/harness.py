"""Experiment harness: default configuration, both scenarios, token study.

The bundled defaults are engineering choices sized so that a 50-50 split
comfortably carries 80 Mbps per slice but not 120 Mbps, which reproduces
the qualitative step-traffic behaviour the experiments need.  Scenario 1
timelines are configuration, not code, because the source traffic rates
are only approximate.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import AllocationRatio, RadioConfig, SliceKind, SliceSpec
from .agents import HeuristicOracleBackend, RemoteBackend, ScriptedBackend
from .baselines import fixed_policy
from .loop import Environment, ExperimentLog, run_experiment
from .radio import QueueConfig, RandomGridProfile, StepProfile, UeChannelState
from .stats import compute_distribution_stats, write_csv

# Uniform SINR giving each RB exactly 2.2 Mbps at 180 kHz, so the default
# 106-RB pool carries 233.2 Mbps total and a 53-RB half carries 116.6 Mbps.
DEFAULT_UE_SINR = 2.0 ** (2_200_000 / 180_000) - 1.0

FIXED_BASELINES = {
    "fixed_50_50": (0.5, 0.5),
    "fixed_60_40": (0.6, 0.4),
    "fixed_70_30": (0.7, 0.3),
}


@dataclass
class HarnessConfig:
    """Fully resolved experiment configuration; JSON round-trippable."""

    total_rbs: int = 106
    rb_bandwidth_hz: float = 180_000.0
    interval_duration_s: float = 1.0
    monitoring_interval_s: float = 1.0
    wait_period_s: float = 5.0
    violation_threshold: float = 0.7

    packet_size_bytes: int = 1500
    buffer_capacity_packets: int = 256
    tick_duration_ms: float = 1.0
    ue_sinr: float = DEFAULT_UE_SINR

    s1_sla_ms: float = 10.0
    s1_weight: float = 2.0
    s1_shape_a: float = 10.0
    s1_shape_b: float = 0.2
    s2_target_mbps: float = 1000.0
    s2_weight: float = 1.0
    s2_shape_a: float = -30.0
    s2_shape_b: float = -0.02

    retrieve_k: int = 3
    initial_shares: Tuple[float, float] = (0.5, 0.5)

    scenario1_cycles: int = 50
    scenario1_steps: Tuple[Tuple[Tuple[int, float], ...], ...] = (
        ((0, 80.0), (10, 120.0), (20, 80.0), (40, 120.0)),
        ((0, 80.0), (20, 110.0), (30, 125.0), (40, 80.0)),
    )

    scenario2_grid: Tuple[float, ...] = tuple(float(v) for v in range(80, 130, 5))
    scenario2_cycles: int = 10

    remote_endpoint: str = ""
    remote_model: str = ""
    scripted_path: str = ""

    def radio_cfg(self) -> RadioConfig:
        return RadioConfig(
            total_rbs=self.total_rbs,
            rb_bandwidth_hz=self.rb_bandwidth_hz,
            interval_duration_s=self.interval_duration_s,
            monitoring_interval_s=self.monitoring_interval_s,
            wait_period_s=self.wait_period_s,
            violation_threshold=self.violation_threshold,
        )

    def queue_cfg(self) -> QueueConfig:
        return QueueConfig(
            packet_size_bytes=self.packet_size_bytes,
            buffer_capacity_packets=self.buffer_capacity_packets,
            tick_duration_ms=self.tick_duration_ms,
        )

    def specs(self) -> list[SliceSpec]:
        return [
            SliceSpec(0, SliceKind.LATENCY, self.s1_sla_ms, self.s1_weight,
                      self.s1_shape_a, self.s1_shape_b),
            SliceSpec(1, SliceKind.THROUGHPUT, self.s2_target_mbps, self.s2_weight,
                      self.s2_shape_a, self.s2_shape_b),
        ]

    def channels(self) -> list[UeChannelState]:
        return [
            UeChannelState(ue_id=0, slice_id=0, sinr=self.ue_sinr),
            UeChannelState(ue_id=1, slice_id=1, sinr=self.ue_sinr),
        ]

    def env(self, profile) -> Environment:
        return Environment(
            radio_cfg=self.radio_cfg(),
            queue_cfg=self.queue_cfg(),
            specs=self.specs(),
            channels=self.channels(),
            profile=profile,
            retrieve_k=self.retrieve_k,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HarnessConfig":
        kwargs = dict(data)
        if "scenario1_steps" in kwargs:
            kwargs["scenario1_steps"] = tuple(
                tuple((int(s), float(r)) for s, r in slice_steps)
                for slice_steps in kwargs["scenario1_steps"]
            )
        if "scenario2_grid" in kwargs:
            kwargs["scenario2_grid"] = tuple(float(v) for v in kwargs["scenario2_grid"])
        if "initial_shares" in kwargs:
            kwargs["initial_shares"] = tuple(float(v) for v in kwargs["initial_shares"])
        return cls(**kwargs)


def make_backend(name: str, config: HarnessConfig):
    if name == "oracle":
        return HeuristicOracleBackend()
    if name == "scripted":
        if not config.scripted_path:
            raise ValueError("scripted backend needs scripted_path in the config")
        return ScriptedBackend.from_file(config.scripted_path)
    if name == "remote":
        if not config.remote_endpoint or not config.remote_model:
            raise ValueError("remote backend needs remote_endpoint and remote_model")
        return RemoteBackend(config.remote_endpoint, config.remote_model)
    raise ValueError(f"unknown backend {name!r}")


def _phase_starts(config: HarnessConfig) -> list[int]:
    starts = {0}
    for slice_steps in config.scenario1_steps:
        starts.update(s for s, _ in slice_steps)
    return sorted(starts)


def run_scenario1(
    config: HarnessConfig,
    backend_name: str = "oracle",
    seed: int = 42,
    gate_enabled: bool = True,
) -> tuple[ExperimentLog, dict]:
    """Single continuous run over the bundled step timeline."""
    profile = StepProfile(steps=config.scenario1_steps)
    backend = make_backend(backend_name, config)
    log = run_experiment(
        config.env(profile),
        config.scenario1_cycles,
        backend,
        initial_allocation=AllocationRatio(config.initial_shares),
        gate_enabled=gate_enabled,
    )

    starts = _phase_starts(config)
    bounds = starts + [config.scenario1_cycles]
    phases = []
    for p in range(len(starts)):
        lo, hi = bounds[p], bounds[p + 1]
        cycles = [c for c in log.cycles if lo <= c.interval_index < hi]
        settled = cycles[-3:] if len(cycles) >= 3 else cycles
        phases.append(
            {
                "start": lo,
                "end": hi,
                "offered_mbps": list(cycles[0].offered_mbps),
                "reallocations": sum(1 for c in cycles if c.reallocated),
                "settled_s1_latency_ms": float(
                    np.mean([c.kpm.slices[0].mean_latency_ms for c in settled])
                ),
                "settled_s2_drop_ratio": float(
                    np.mean([c.kpm.slices[1].drop_ratio for c in settled])
                ),
            }
        )
    summary = {
        "seed": seed,
        "backend": backend_name,
        "gate_enabled": gate_enabled,
        "cycles": config.scenario1_cycles,
        "reallocation_count": log.reallocation_count,
        "reallocation_intervals": [
            c.interval_index for c in log.cycles if c.reallocated
        ],
        "backend_call_count": log.backend_call_count,
        "total_prompt_tokens": log.final_state.prompt_tokens,
        "total_completion_tokens": log.final_state.completion_tokens,
        "phases": phases,
    }
    return log, summary


def scenario2_draws(config: HarnessConfig, trials: int, seed: int) -> list[tuple[float, float]]:
    """Per-trial (S1, S2) offered rates, deterministic in (seed, trial)."""
    draws = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        idx = rng.integers(0, len(config.scenario2_grid), size=2)
        draws.append(
            (config.scenario2_grid[idx[0]], config.scenario2_grid[idx[1]])
        )
    return draws


def run_scenario2(
    config: HarnessConfig,
    trials: int = 70,
    backend_name: str = "oracle",
    seed: int = 42,
) -> dict:
    """Paired comparison: adaptive vs fixed policies on identical traffic.

    Every policy in a trial sees the same constant drawn rates; samples
    are per interval, pooled across trials.
    """
    draws = scenario2_draws(config, trials, seed)
    policies = ["adaptive"] + list(FIXED_BASELINES)
    results = {
        name: {"s1_latency_ms": [], "s2_drop_ratio": [], "trial_max_s2_drop": []}
        for name in policies
    }
    for trial, (r1, r2) in enumerate(draws):
        profile = StepProfile(steps=(((0, r1),), ((0, r2),)))
        env = config.env(profile)
        for name in policies:
            if name == "adaptive":
                backend = make_backend(backend_name, config)
                initial = AllocationRatio(config.initial_shares)
            else:
                backend = None
                initial = fixed_policy(FIXED_BASELINES[name]).shares
            log = run_experiment(
                env, config.scenario2_cycles, backend, initial_allocation=initial
            )
            lat = [c.kpm.slices[0].mean_latency_ms for c in log.cycles]
            drop = [c.kpm.slices[1].drop_ratio for c in log.cycles]
            results[name]["s1_latency_ms"].extend(lat)
            results[name]["s2_drop_ratio"].extend(drop)
            results[name]["trial_max_s2_drop"].append(max(drop))
    return {"draws": draws, "policies": results, "trials": trials, "seed": seed}


def run_token_comparison(
    config: HarnessConfig, backend_name: str = "oracle", seed: int = 42
) -> dict:
    """Scenario 1 twice on the same seed: gated vs decision-every-cycle."""
    gated_log, gated_summary = run_scenario1(config, backend_name, seed, gate_enabled=True)
    ungated_log, ungated_summary = run_scenario1(
        config, backend_name, seed, gate_enabled=False
    )
    return {
        "gated": {"log": gated_log, "summary": gated_summary},
        "ungated": {"log": ungated_log, "summary": ungated_summary},
        "gated_cumulative": gated_log.cumulative_tokens,
        "ungated_cumulative": ungated_log.cumulative_tokens,
    }


TIMELINE_FIELDS = [
    "interval",
    "slice_id",
    "latency_ms",
    "throughput_mbps",
    "drop_ratio",
    "offered_mbps",
    "rb_count",
]


def write_run_dir(
    out_dir: Path,
    config: HarnessConfig,
    log: Optional[ExperimentLog] = None,
    summary: Optional[dict] = None,
    extra_csvs: Optional[dict] = None,
) -> None:
    """One directory per run: resolved config, timeline, summary, figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
    if log is not None:
        write_csv(out_dir / "timeline.csv", TIMELINE_FIELDS, log.timeline_rows())
    if summary is not None:
        with open(out_dir / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    for name, (fields, rows) in (extra_csvs or {}).items():
        write_csv(out_dir / name, fields, rows)


def scenario2_figure_csvs(results: dict) -> dict:
    """CSV payloads named after the figures they underlie."""
    csvs = {}
    for metric, fig in (("s1_latency_ms", "fig3a_latency_cdf"), ("s2_drop_ratio", "fig3b_drop_cdf")):
        rows = []
        for policy, data in results["policies"].items():
            stats = compute_distribution_stats(data[metric])
            for x, f in stats["cdf"]:
                rows.append({"policy": policy, "value": x, "cdf": f})
        csvs[f"{fig}.csv"] = (["policy", "value", "cdf"], rows)
    for metric, fig in (("s1_latency_ms", "fig4a_latency_box"), ("s2_drop_ratio", "fig4b_drop_box")):
        rows = []
        for policy, data in results["policies"].items():
            stats = compute_distribution_stats(data[metric])
            rows.append(
                {
                    "policy": policy,
                    "min": stats["min"],
                    "q1": stats["q1"],
                    "median": stats["median"],
                    "q3": stats["q3"],
                    "max": stats["max"],
                    "p95": stats["p95"],
                }
            )
        csvs[f"{fig}.csv"] = (["policy", "min", "q1", "median", "q3", "max", "p95"], rows)
    return csvs


def token_figure_csv(comparison: dict) -> tuple[list[str], list[dict]]:
    rows = [
        {"cycle": i, "gated_cumulative": g, "ungated_cumulative": u}
        for i, (g, u) in enumerate(
            zip(comparison["gated_cumulative"], comparison["ungated_cumulative"])
        )
    ]
    return ["cycle", "gated_cumulative", "ungated_cumulative"], rows
