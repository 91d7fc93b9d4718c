"""Closed control loop: monitor, assess, gate, retrieve, decide, apply, wait.

Each cycle covers exactly one monitoring interval.  The wait period after
a reallocation is simulated time: the next ``ceil(wait / interval)``
cycles still run the simulator and record experiences, but the gate is
held closed, mirroring a controller that sleeps while the network
settles.  On any backend failure the previous allocation stays in force
(fail-static) so failures show up in the metrics instead of being
masked by a fallback policy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import AllocationRatio, KpmSample, RadioConfig, SliceSpec, ratio_to_rb_counts
from .agents import (
    Backend,
    BackendError,
    DecisionOutcome,
    MetaPrompt,
    Predictor,
    build_meta_prompt,
)
from .radio import (
    IntervalResult,
    QueueConfig,
    SimState,
    TrafficProfile,
    UeChannelState,
    generate_traffic,
    simulate_interval,
)
from .sla import RiskAssessment, assess
from .store import ExperienceStore


@dataclass
class LoopState:
    current_allocation: AllocationRatio
    interval_index: int
    prompt_tokens: int
    completion_tokens: int
    last_assessment: Optional[RiskAssessment]
    sim_state: SimState
    cooldown_remaining: int = 0


@dataclass(frozen=True)
class CycleReport:
    interval_index: int
    kpm: KpmSample
    assessment: RiskAssessment
    rb_counts: tuple[int, ...]
    offered_mbps: tuple[float, ...]
    gate_open: bool
    decision: Optional[DecisionOutcome]
    backend_error: Optional[str]
    prompt_token_delta: int
    completion_token_delta: int
    accounting: tuple

    @property
    def token_delta(self) -> int:
        return self.prompt_token_delta + self.completion_token_delta

    @property
    def reallocated(self) -> bool:
        return self.decision is not None


@dataclass
class Environment:
    """Everything the loop needs besides its own mutable state."""

    radio_cfg: RadioConfig
    queue_cfg: QueueConfig
    specs: list[SliceSpec]
    channels: list[UeChannelState]
    profile: TrafficProfile
    retrieve_k: int = 3

    def cooldown_cycles(self) -> int:
        return math.ceil(
            self.radio_cfg.wait_period_s / self.radio_cfg.monitoring_interval_s
        )


def _kpm_summary(kpm: KpmSample) -> list[dict]:
    return [
        {
            "latency_ms": s.mean_latency_ms,
            "throughput_mbps": s.mean_throughput_mbps,
            "drop_ratio": s.drop_ratio,
        }
        for s in kpm.slices
    ]


def run_cycle(
    state: LoopState,
    env: Environment,
    store: ExperienceStore,
    backend: Optional[Backend],
    gate_enabled: bool = True,
) -> tuple[LoopState, CycleReport]:
    """One monitoring interval plus the decision path it triggers.

    ``backend=None`` runs a fixed policy: KPMs and assessments are still
    produced for comparison but no reallocation ever happens.  With the
    gate disabled the backend is consulted every cycle regardless of the
    assessment (and no cooldown applies), which is the costly variant the
    token comparison measures against.
    """
    idx = state.interval_index
    offered = generate_traffic(env.profile, idx)
    rb_counts = ratio_to_rb_counts(state.current_allocation, env.radio_cfg.total_rbs)
    result = simulate_interval(
        offered,
        rb_counts,
        env.channels,
        env.radio_cfg,
        env.queue_cfg,
        state.sim_state,
        interval_index=idx,
    )
    assessment = assess(
        [result.kpm], env.specs, env.radio_cfg.violation_threshold
    )

    in_cooldown = gate_enabled and state.cooldown_remaining > 0
    if backend is None:
        gate_open = False
    elif gate_enabled:
        gate_open = assessment.violation_detected and not in_cooldown
    else:
        gate_open = True

    decision: Optional[DecisionOutcome] = None
    backend_error: Optional[str] = None
    applied_allocation = state.current_allocation
    new_cooldown = max(0, state.cooldown_remaining - 1)
    if gate_open:
        retrieved = store.retrieve(offered, env.retrieve_k)
        prompt = build_meta_prompt(
            assessment,
            result.kpm,
            state.current_allocation,
            retrieved,
            env.specs,
            env.radio_cfg,
        )
        predictor = Predictor(
            offered, env.channels, env.radio_cfg, env.queue_cfg, env.specs, result.state
        )
        try:
            decision = backend.propose(prompt, predictor)
            applied_allocation = decision.allocation
            if gate_enabled:
                new_cooldown = env.cooldown_cycles()
        except BackendError as exc:
            backend_error = str(exc)

    store.record(
        arrival_rates_mbps=offered,
        allocation_shares=applied_allocation.shares,
        resulting_sigma=assessment.sigma,
        kpm_summary=_kpm_summary(result.kpm),
        created_at_interval=idx,
    )

    p_delta = decision.prompt_tokens if decision else 0
    c_delta = decision.completion_tokens if decision else 0
    new_state = LoopState(
        current_allocation=applied_allocation,
        interval_index=idx + 1,
        prompt_tokens=state.prompt_tokens + p_delta,
        completion_tokens=state.completion_tokens + c_delta,
        last_assessment=assessment,
        sim_state=result.state,
        cooldown_remaining=new_cooldown,
    )
    report = CycleReport(
        interval_index=idx,
        kpm=result.kpm,
        assessment=assessment,
        rb_counts=tuple(rb_counts),
        offered_mbps=tuple(offered),
        gate_open=gate_open,
        decision=decision,
        backend_error=backend_error,
        prompt_token_delta=p_delta,
        completion_token_delta=c_delta,
        accounting=result.accounting,
    )
    return new_state, report


@dataclass
class ExperimentLog:
    cycles: list[CycleReport]
    final_state: LoopState

    @property
    def reallocation_count(self) -> int:
        return sum(1 for c in self.cycles if c.reallocated)

    @property
    def backend_call_count(self) -> int:
        return sum(1 for c in self.cycles if c.gate_open)

    @property
    def cumulative_tokens(self) -> list[int]:
        out, total = [], 0
        for c in self.cycles:
            total += c.token_delta
            out.append(total)
        return out

    def timeline_rows(self) -> list[dict]:
        """Flat per-(interval, slice) rows matching the KPM CSV schema."""
        rows = []
        for c in self.cycles:
            for k, s in enumerate(c.kpm.slices):
                rows.append(
                    {
                        "interval": c.interval_index,
                        "slice_id": k,
                        "latency_ms": s.mean_latency_ms,
                        "throughput_mbps": s.mean_throughput_mbps,
                        "drop_ratio": s.drop_ratio,
                        "offered_mbps": s.offered_load_mbps,
                        "rb_count": c.rb_counts[k],
                    }
                )
        return rows


def run_experiment(
    env: Environment,
    n_cycles: int,
    backend: Optional[Backend],
    initial_allocation: Optional[AllocationRatio] = None,
    store: Optional[ExperienceStore] = None,
    gate_enabled: bool = True,
) -> ExperimentLog:
    """Run a full deterministic timeline of cycles."""
    n_slices = len(env.specs)
    if initial_allocation is None:
        initial_allocation = AllocationRatio([1.0 / n_slices] * n_slices)
    if store is None:
        store = ExperienceStore(n_slices)
    state = LoopState(
        current_allocation=initial_allocation,
        interval_index=0,
        prompt_tokens=0,
        completion_tokens=0,
        last_assessment=None,
        sim_state=SimState.fresh(n_slices),
    )
    cycles = []
    for _ in range(n_cycles):
        state, report = run_cycle(state, env, store, backend, gate_enabled)
        cycles.append(report)
    return ExperimentLog(cycles=cycles, final_state=state)
