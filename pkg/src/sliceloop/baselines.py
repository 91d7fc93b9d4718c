"""Fixed-share policies and an exhaustive small-instance optimizer.

The optimizer enumerates every integer RB split (each slice at least one
RB), predicts one interval per split on a cloned queue state, and picks
the split maximizing the throughput slices' total predicted throughput
subject to the latency bounds (and throughput floors when declared).
If nothing is feasible it falls back to the split with the best
predicted compliance index.  Exponential in the slice count, so capped
at three slices; at desk scale exactness is the point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .core import AllocationRatio, RadioConfig, SliceKind, SliceSpec
from .radio import QueueConfig, SimState, UeChannelState, simulate_interval
from .sla import assess


class UnsupportedScaleError(ValueError):
    """Exhaustive enumeration is only offered for two or three slices."""


@dataclass(frozen=True)
class FixedPolicy:
    """A policy that returns the same shares every cycle."""

    shares: AllocationRatio

    def allocation_at(self, cycle: int) -> AllocationRatio:
        return self.shares


def fixed_policy(shares: Sequence[float]) -> FixedPolicy:
    return FixedPolicy(AllocationRatio(shares))


@dataclass(frozen=True)
class OptimizerResult:
    allocation: AllocationRatio
    rb_counts: Tuple[int, ...]
    feasible: bool
    objective: float  # predicted total throughput of the throughput slices, Mbps
    sigma: float


@dataclass(frozen=True)
class EnumerationRow:
    rb_counts: Tuple[int, ...]
    latencies_ms: Tuple[float, ...]
    throughputs_mbps: Tuple[float, ...]
    drop_ratios: Tuple[float, ...]
    sigma: float
    objective: float
    feasible: bool


def _splits(total: int, parts: int):
    """All integer compositions of ``total`` into ``parts`` parts >= 1."""
    if parts == 2:
        for i in range(1, total):
            yield (i, total - i)
        return
    for i in range(1, total - parts + 2):
        for rest in _splits(total - i, parts - 1):
            yield (i,) + rest


def enumerate_splits(
    offered_mbps: Sequence[float],
    channels: Sequence[UeChannelState],
    radio_cfg: RadioConfig,
    queue_cfg: QueueConfig,
    specs: Sequence[SliceSpec],
    state: Optional[SimState] = None,
    throughput_floors: Optional[Sequence[float]] = None,
) -> list[EnumerationRow]:
    """Predicted KPM table for every feasible-by-construction RB split."""
    n = len(specs)
    if n < 2 or n > 3:
        raise UnsupportedScaleError(f"{n} slices (supported: 2 or 3)")
    if state is None:
        state = SimState.fresh(n)
    if throughput_floors is None:
        throughput_floors = [0.0] * n

    rows = []
    for counts in _splits(radio_cfg.total_rbs, n):
        kpm = simulate_interval(
            offered_mbps, counts, channels, radio_cfg, queue_cfg, state.clone()
        ).kpm
        a = assess([kpm], specs, radio_cfg.violation_threshold)
        objective = sum(
            kpm.slices[k].mean_throughput_mbps
            for k, spec in enumerate(specs)
            if spec.kind is SliceKind.THROUGHPUT
        )
        feasible = True
        for k, spec in enumerate(specs):
            if spec.kind is SliceKind.LATENCY:
                if not kpm.slices[k].mean_latency_ms < spec.sla_target:
                    feasible = False
            elif throughput_floors[k] > 0:
                if not kpm.slices[k].mean_throughput_mbps > throughput_floors[k]:
                    feasible = False
        rows.append(
            EnumerationRow(
                rb_counts=counts,
                latencies_ms=tuple(s.mean_latency_ms for s in kpm.slices),
                throughputs_mbps=tuple(s.mean_throughput_mbps for s in kpm.slices),
                drop_ratios=tuple(s.drop_ratio for s in kpm.slices),
                sigma=a.sigma,
                objective=objective,
                feasible=feasible,
            )
        )
    return rows


def _latency_rb_total(counts: Sequence[int], specs: Sequence[SliceSpec]) -> int:
    return sum(
        c for c, s in zip(counts, specs) if s.kind is SliceKind.LATENCY
    )


def brute_force_optimal(
    offered_mbps: Sequence[float],
    channels: Sequence[UeChannelState],
    radio_cfg: RadioConfig,
    queue_cfg: QueueConfig,
    specs: Sequence[SliceSpec],
    state: Optional[SimState] = None,
    throughput_floors: Optional[Sequence[float]] = None,
) -> OptimizerResult:
    """Exact per-interval optimum by enumeration.

    Ties break toward the fewest RBs on latency slices, then the lowest
    slice-0 count; the result is invariant to enumeration order.
    """
    rows = enumerate_splits(
        offered_mbps, channels, radio_cfg, queue_cfg, specs, state, throughput_floors
    )
    feasible_rows = [r for r in rows if r.feasible]
    if feasible_rows:
        pool = feasible_rows
        key = lambda r: (
            -r.objective,
            _latency_rb_total(r.rb_counts, specs),
            r.rb_counts[0],
        )
    else:
        pool = rows
        key = lambda r: (
            -r.sigma,
            _latency_rb_total(r.rb_counts, specs),
            r.rb_counts[0],
        )
    best = min(pool, key=key)
    total = radio_cfg.total_rbs
    return OptimizerResult(
        allocation=AllocationRatio([c / total for c in best.rb_counts]),
        rb_counts=best.rb_counts,
        feasible=bool(feasible_rows),
        objective=best.objective,
        sigma=best.sigma,
    )
