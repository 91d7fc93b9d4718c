"""SLA violation math: violation level, sigmoid risk factor, compliance index.

Conventions worth knowing:

* The violation level is ``(measured - target) / target`` for both slice
  kinds.  For throughput slices that makes a positive value the *good*
  direction, so those slices use a negative sigmoid slope (``shape_a``)
  to restore the intended risk semantics.
* For throughput slices the target is capped at the offered load: a slice
  cannot violate a throughput SLA it never asked to use.  With a large
  configured target this makes the violation level equal to minus the
  drop ratio, which is the quantity the operator actually cares about
  for best-effort traffic.
* A latency slice that delivered nothing while traffic was offered is
  total starvation and scores maximal risk rather than "no data".
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit

from .core import KpmSample, SliceKind, SliceSpec

_RHO_MAX = 1.0 - sys.float_info.epsilon
_RHO_MIN = sys.float_info.min


@dataclass(frozen=True)
class SliceRisk:
    epsilon: float
    rho: float


@dataclass(frozen=True)
class RiskAssessment:
    """Per-interval risk picture: epsilon/rho per slice, sigma, gate verdict."""

    interval_index: int
    slices: Tuple[SliceRisk, ...]
    sigma: float
    violation_detected: bool

    def to_dict(self) -> dict:
        """Versioned JSON-serialisable form (the A1-like message body)."""
        return {
            "version": 1,
            "interval": self.interval_index,
            "slices": [{"epsilon": s.epsilon, "rho": s.rho} for s in self.slices],
            "sigma": self.sigma,
            "violation_detected": self.violation_detected,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RiskAssessment":
        if data.get("version") != 1:
            raise ValueError(f"unsupported assessment version {data.get('version')}")
        return cls(
            interval_index=data["interval"],
            slices=tuple(SliceRisk(s["epsilon"], s["rho"]) for s in data["slices"]),
            sigma=data["sigma"],
            violation_detected=data["violation_detected"],
        )


class NoDataError(ValueError):
    """No measurement available to score against the SLA."""


def violation_level(measured: float, spec: SliceSpec) -> float:
    """Normalised SLA excess: (measured - target) / target."""
    return (measured - spec.sla_target) / spec.sla_target


def risk_factor(epsilon: float, spec: SliceSpec) -> float:
    """Sigmoid risk 1 / (1 + exp(-a * (eps - b))), clamped strictly into (0, 1)."""
    rho = float(expit(spec.shape_a * (epsilon - spec.shape_b)))
    return min(max(rho, _RHO_MIN), _RHO_MAX)


def compliance_index(rhos: Sequence[float], weights: Sequence[float]) -> float:
    """Negative weighted sum of squared risks; 0 only with zero risk everywhere."""
    if len(rhos) != len(weights):
        raise ValueError(f"{len(rhos)} risks vs {len(weights)} weights")
    return -float(sum(w * r * r for r, w in zip(rhos, weights)))


def _slice_epsilon(
    spec: SliceSpec,
    mean_latency_ms: float,
    mean_throughput_mbps: float,
    mean_drop_ratio: float,
    mean_offered_mbps: float,
    total_delivered: int,
) -> tuple[float, float | None]:
    """Violation level for one slice; second element overrides rho if set."""
    if spec.kind is SliceKind.LATENCY:
        if total_delivered == 0 and mean_offered_mbps > 0:
            # Starvation: worst possible violation, not missing data.
            return float("inf"), _RHO_MAX
        return violation_level(mean_latency_ms, spec), None
    if spec.sla_target <= mean_offered_mbps:
        # A declared floor below current demand binds as written.
        return violation_level(mean_throughput_mbps, spec), None
    if mean_offered_mbps <= 0:
        return 0.0, None
    # Demand-capped target: the shortfall against demand is the drop
    # ratio, which is the metric of record for best-effort slices.
    return -mean_drop_ratio, None


def assess(
    window: Sequence[KpmSample], specs: Sequence[SliceSpec], theta: float
) -> RiskAssessment:
    """Score a monitoring window and decide whether the gate fires.

    Measurements are averaged over the window first; the violation level
    is affine in the measurement, so this commutes with per-sample
    assessment of the mean.
    """
    if not window:
        raise ValueError("assessment window must be nonempty")
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    n_slices = len(specs)
    for sample in window:
        if len(sample.slices) != n_slices:
            raise ValueError("sample slice count does not match specs")

    risks = []
    for k, spec in enumerate(specs):
        lat = float(np.mean([s.slices[k].mean_latency_ms for s in window]))
        thr = float(np.mean([s.slices[k].mean_throughput_mbps for s in window]))
        off = float(np.mean([s.slices[k].offered_load_mbps for s in window]))
        drop = float(np.mean([s.slices[k].drop_ratio for s in window]))
        delivered = sum(s.slices[k].delivered_count for s in window)
        epsilon, rho_override = _slice_epsilon(spec, lat, thr, drop, off, delivered)
        rho = rho_override if rho_override is not None else risk_factor(epsilon, spec)
        risks.append(SliceRisk(epsilon=epsilon, rho=rho))

    sigma = compliance_index([r.rho for r in risks], [s.weight for s in specs])
    detected = max(r.rho for r in risks) > theta
    return RiskAssessment(
        interval_index=window[-1].interval_index,
        slices=tuple(risks),
        sigma=sigma,
        violation_detected=detected,
    )
