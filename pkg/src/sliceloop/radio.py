"""Discrete-time air-interface simulation.

Capacity model: each user's channel capacity is the Shannon sum over its
assigned RBs, ``B * sum_j log2(1 + SINR_j)``; user throughput over an
interval is capacity times the interval duration, and slice throughput is
the sum over the slice's users.

Queue model: one FIFO per slice, packetised arrivals (fixed packet size),
finite buffer, tick-driven service at the slice's aggregate capacity.
Arrivals are deterministic (evenly spaced at the offered rate) so that
every KPM timeline is exactly reproducible; packets arriving to a full
buffer are dropped.  Latency is enqueue-to-dequeue time at tick
granularity, so an unloaded slice reports one tick of transmission delay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import KpmSample, RadioConfig, SliceKpm


@dataclass(frozen=True)
class UeChannelState:
    """Per-user channel quality: linear SINR, per RB or uniform."""

    ue_id: int
    slice_id: int
    sinr: Union[float, Tuple[float, ...]]

    def __post_init__(self) -> None:
        values = self.sinr if isinstance(self.sinr, tuple) else (self.sinr,)
        for v in values:
            if v < 0:
                raise ValueError(f"SINR must be nonnegative (linear), got {v}")

    def sinr_for_rb(self, j: int) -> float:
        if isinstance(self.sinr, tuple):
            return self.sinr[j]
        return self.sinr


@dataclass(frozen=True)
class QueueConfig:
    packet_size_bytes: int = 1500
    buffer_capacity_packets: int = 256
    tick_duration_ms: float = 1.0

    def __post_init__(self) -> None:
        if self.packet_size_bytes <= 0 or self.buffer_capacity_packets <= 0:
            raise ValueError("queue parameters must be positive")
        if self.tick_duration_ms <= 0:
            raise ValueError("tick_duration_ms must be positive")

    @property
    def packet_bits(self) -> int:
        return self.packet_size_bytes * 8


@dataclass(frozen=True)
class StepProfile:
    """Per-slice piecewise-constant offered load.

    ``steps[k]`` is a tuple of ``(start_interval, rate_mbps)`` pairs for
    slice ``k``, with strictly increasing start intervals.
    """

    steps: Tuple[Tuple[Tuple[int, float], ...], ...]

    def __post_init__(self) -> None:
        for slice_steps in self.steps:
            if not slice_steps:
                raise ValueError("each slice needs at least one step")
            starts = [s for s, _ in slice_steps]
            if starts != sorted(set(starts)):
                raise ValueError("step intervals must be strictly increasing")
            if any(r < 0 for _, r in slice_steps):
                raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class RandomGridProfile:
    """Seeded per-interval uniform draw from a fixed rate grid, per slice."""

    values_mbps: Tuple[float, ...]
    seed: int
    n_slices: int = 2

    def __post_init__(self) -> None:
        if not self.values_mbps:
            raise ValueError("values_mbps must be nonempty")
        if any(v < 0 for v in self.values_mbps):
            raise ValueError("rates must be nonnegative")


TrafficProfile = Union[StepProfile, RandomGridProfile]


def generate_traffic(profile: TrafficProfile, interval_index: int) -> list[float]:
    """Offered rate per slice (Mbps) at the given interval.

    Deterministic given the profile: step profiles look up the active
    step, grid profiles hash (seed, interval) into a fresh generator.
    """
    if isinstance(profile, StepProfile):
        rates = []
        for slice_steps in profile.steps:
            rate = slice_steps[0][1]
            for start, r in slice_steps:
                if interval_index >= start:
                    rate = r
            rates.append(rate)
        return rates
    rng = np.random.default_rng([profile.seed, interval_index])
    idx = rng.integers(0, len(profile.values_mbps), size=profile.n_slices)
    return [profile.values_mbps[i] for i in idx]


def channel_capacity(ue: UeChannelState, assigned_rbs: int, rb_bandwidth_hz: float) -> float:
    """Shannon capacity in bits per second over the user's assigned RBs."""
    if assigned_rbs < 0:
        raise ValueError("assigned_rbs must be nonnegative")
    if assigned_rbs == 0:
        return 0.0
    if isinstance(ue.sinr, tuple):
        if len(ue.sinr) < assigned_rbs:
            raise ValueError("not enough per-RB SINR entries")
        total = sum(math.log2(1.0 + ue.sinr[j]) for j in range(assigned_rbs))
    else:
        total = assigned_rbs * math.log2(1.0 + ue.sinr)
    return rb_bandwidth_hz * total


def user_throughput(capacity_bps: float, interval_duration_s: float) -> float:
    """Bits deliverable by one user within the interval."""
    if capacity_bps < 0 or interval_duration_s < 0:
        raise ValueError("arguments must be nonnegative")
    return interval_duration_s * capacity_bps


def slice_throughput(user_throughputs: Sequence[float]) -> float:
    """Aggregate slice throughput: plain sum, 0 for no users."""
    return float(sum(user_throughputs))


def split_rbs_among_users(rb_count: int, n_users: int) -> list[int]:
    """Divide a slice's RBs across its users as evenly as possible."""
    if n_users <= 0:
        return []
    base, extra = divmod(rb_count, n_users)
    return [base + (1 if i < extra else 0) for i in range(n_users)]


def slice_capacity_bps(
    ues: Sequence[UeChannelState], rb_count: int, rb_bandwidth_hz: float
) -> float:
    """Aggregate service rate of one slice given its RB count."""
    per_user = split_rbs_among_users(rb_count, len(ues))
    return slice_throughput(
        [channel_capacity(ue, n, rb_bandwidth_hz) for ue, n in zip(ues, per_user)]
    )


class InternalStateError(RuntimeError):
    """Carried queue state is inconsistent with the configuration."""


@dataclass
class SliceQueueState:
    """FIFO backlog of one slice: absolute arrival tick per queued packet."""

    arrival_ticks: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    arrival_carry: float = 0.0
    service_credit: float = 0.0

    def clone(self) -> "SliceQueueState":
        return SliceQueueState(
            arrival_ticks=self.arrival_ticks.copy(),
            arrival_carry=self.arrival_carry,
            service_credit=self.service_credit,
        )


@dataclass
class SimState:
    """Carried simulation state: global tick counter plus per-slice queues."""

    tick: int
    queues: list[SliceQueueState]

    @classmethod
    def fresh(cls, n_slices: int) -> "SimState":
        return cls(tick=0, queues=[SliceQueueState() for _ in range(n_slices)])

    def clone(self) -> "SimState":
        return SimState(tick=self.tick, queues=[q.clone() for q in self.queues])


@dataclass(frozen=True)
class SliceAccounting:
    """Exact packet-level books for one slice over one interval."""

    offered_packets: int
    delivered_packets: int
    dropped_packets: int
    queued_before: int
    queued_after: int


@dataclass(frozen=True)
class IntervalResult:
    kpm: KpmSample
    state: SimState
    accounting: Tuple[SliceAccounting, ...]


def _advance_slice(
    qs: SliceQueueState,
    offered_bps: float,
    service_bps: float,
    n_ticks: int,
    tick_s: float,
    packet_bits: int,
    buffer_cap: int,
    start_tick: int,
) -> tuple[SliceQueueState, SliceAccounting, float, int]:
    """Run one slice's queue over the interval.

    Returns (new state, accounting, mean latency in ticks, delivered).
    Within a tick, arrivals join the queue first and service follows, so
    a packet served in its arrival tick experiences one tick of latency.
    """
    queued_before = len(qs.arrival_ticks)
    if queued_before > buffer_cap:
        raise InternalStateError("queued backlog exceeds buffer capacity")

    r = offered_bps * tick_s / packet_bits  # arrival, packets per tick
    c = service_bps * tick_s / packet_bits  # service, packets per tick

    ticks = np.arange(1, n_ticks + 1, dtype=np.float64)
    cum_offered = np.floor(qs.arrival_carry + r * ticks).astype(np.int64)
    offered = int(cum_offered[-1])
    carry_out = qs.arrival_carry + r * n_ticks - offered
    arrivals = np.diff(cum_offered, prepend=np.int64(0))

    q = queued_before
    credit = qs.service_credit
    admitted = np.zeros(n_ticks, dtype=np.int64)
    served = np.zeros(n_ticks, dtype=np.int64)
    dropped = 0
    for t in range(n_ticks):
        a = int(arrivals[t])
        room = buffer_cap - q
        adm = a if a <= room else room
        dropped += a - adm
        q += adm
        credit += c
        s = int(credit)
        if s > q:
            s = q
        q -= s
        credit -= s
        if q == 0:
            credit = 0.0
        admitted[t] = adm
        served[t] = s

    new_arrivals = np.repeat(start_tick + np.arange(n_ticks, dtype=np.int64), admitted)
    all_arrivals = np.concatenate([qs.arrival_ticks, new_arrivals])
    cum_served = np.cumsum(served)
    delivered = int(cum_served[-1])
    if delivered > 0:
        dep_idx = np.searchsorted(cum_served, np.arange(delivered), side="right")
        latency_ticks = (start_tick + dep_idx) - all_arrivals[:delivered] + 1
        mean_latency_ticks = float(latency_ticks.mean())
    else:
        mean_latency_ticks = 0.0

    new_state = SliceQueueState(
        arrival_ticks=all_arrivals[delivered:],
        arrival_carry=carry_out,
        service_credit=credit,
    )
    acct = SliceAccounting(
        offered_packets=offered,
        delivered_packets=delivered,
        dropped_packets=dropped,
        queued_before=queued_before,
        queued_after=int(q),
    )
    return new_state, acct, mean_latency_ticks, delivered


def simulate_interval(
    offered_mbps: Sequence[float],
    rb_counts: Sequence[int],
    channels: Sequence[UeChannelState],
    radio_cfg: RadioConfig,
    queue_cfg: QueueConfig,
    state: SimState,
    interval_index: int = 0,
) -> IntervalResult:
    """Advance every slice's queue over one monitoring interval.

    The carried ``state`` is not mutated; a new state is returned.  The
    accounting tuple preserves exact packet conservation per slice:
    delivered + dropped + (queued_after - queued_before) == offered.
    """
    n_slices = len(rb_counts)
    if len(offered_mbps) != n_slices or len(state.queues) != n_slices:
        raise InternalStateError("slice counts disagree across inputs")
    if sum(rb_counts) != radio_cfg.total_rbs:
        raise InternalStateError("RB counts must sum to the configured pool")

    tick_s = queue_cfg.tick_duration_ms / 1000.0
    n_ticks = max(1, round(radio_cfg.monitoring_interval_s / tick_s))
    interval_s = n_ticks * tick_s

    slice_kpms = []
    new_queues = []
    accounting = []
    for k in range(n_slices):
        ues = [ue for ue in channels if ue.slice_id == k]
        service_bps = slice_capacity_bps(ues, rb_counts[k], radio_cfg.rb_bandwidth_hz)
        new_qs, acct, lat_ticks, delivered = _advance_slice(
            state.queues[k],
            offered_mbps[k] * 1e6,
            service_bps,
            n_ticks,
            tick_s,
            queue_cfg.packet_bits,
            queue_cfg.buffer_capacity_packets,
            state.tick,
        )
        delivered_mbps = delivered * queue_cfg.packet_bits / interval_s / 1e6
        # Backlog drain can push delivered bits past this interval's offered
        # bits; the KPM reports at most the offered rate and the accounting
        # keeps the exact counts.
        throughput = min(delivered_mbps, offered_mbps[k])
        drop_ratio = (
            acct.dropped_packets / acct.offered_packets if acct.offered_packets else 0.0
        )
        slice_kpms.append(
            SliceKpm(
                mean_latency_ms=lat_ticks * queue_cfg.tick_duration_ms,
                mean_throughput_mbps=throughput,
                drop_ratio=drop_ratio,
                offered_load_mbps=offered_mbps[k],
                delivered_count=delivered,
            )
        )
        new_queues.append(new_qs)
        accounting.append(acct)

    kpm = KpmSample(interval_index=interval_index, slices=slice_kpms)
    new_state = SimState(tick=state.tick + n_ticks, queues=new_queues)
    return IntervalResult(kpm=kpm, state=new_state, accounting=tuple(accounting))
