"""Decision layer: meta-prompt assembly, backends, parsing, token accounting.

Three interchangeable backends sit behind the same ``propose`` call:

* ``HeuristicOracleBackend`` searches the allocation grid against a
  one-interval predictive rollout; it is the default for every offline
  experiment and needs no network.
* ``ScriptedBackend`` replays a fixed decision list for tests.
* ``RemoteBackend`` speaks the de-facto chat-completion JSON wire format
  over HTTPS; credentials come from the RELLM_API_KEY environment
  variable and the endpoint/model are configuration.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence, Tuple

from .core import (
    SUM_TOLERANCE,
    AllocationRatio,
    RadioConfig,
    SliceKind,
    SliceSpec,
    ratio_to_rb_counts,
)
from .radio import QueueConfig, SimState, UeChannelState, simulate_interval
from .sla import RiskAssessment, assess

API_KEY_ENV = "RELLM_API_KEY"


class BackendError(RuntimeError):
    """The backend could not produce a usable decision this cycle."""


class BackendTimeoutError(BackendError):
    pass


class ParseError(BackendError):
    """Model output did not contain a valid shares object."""

    def __init__(self, message: str, text: str = "") -> None:
        super().__init__(f"{message}: {text!r}")
        self.text = text


def count_tokens(text: str, mode: str = "approximate") -> int:
    """Token estimate for offline backends: one token per four bytes."""
    if mode == "approximate":
        return math.ceil(len(text.encode("utf-8")) / 4)
    raise ValueError(f"unknown token counting mode {mode!r}")


def _fmt(x: float) -> str:
    return f"{x:.3f}"


@dataclass(frozen=True)
class MetaPrompt:
    rendered_text: str
    structured_payload: dict


@dataclass(frozen=True)
class DecisionOutcome:
    allocation: AllocationRatio
    prompt_tokens: int
    completion_tokens: int
    backend_label: str
    raw_response: str

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be nonnegative")


def build_meta_prompt(
    assessment: RiskAssessment,
    kpm,
    current_allocation: AllocationRatio,
    retrieved: Sequence,
    specs: Sequence[SliceSpec],
    radio_cfg: RadioConfig,
) -> MetaPrompt:
    """Render the reallocation prompt; byte-identical for equal payloads."""
    payload = {
        "interval": assessment.interval_index,
        "total_rbs": radio_cfg.total_rbs,
        "slices": [
            {
                "slice_id": spec.slice_id,
                "kind": spec.kind.value,
                "sla_target": spec.sla_target,
                "latency_ms": kpm.slices[k].mean_latency_ms,
                "throughput_mbps": kpm.slices[k].mean_throughput_mbps,
                "drop_ratio": kpm.slices[k].drop_ratio,
                "offered_mbps": kpm.slices[k].offered_load_mbps,
                "rho": assessment.slices[k].rho,
            }
            for k, spec in enumerate(specs)
        ],
        "sigma": assessment.sigma,
        "current_shares": list(current_allocation.shares),
        "examples": [
            {
                "rates": list(r.arrival_rates_mbps),
                "shares": list(r.allocation_shares),
                "sigma": r.resulting_sigma,
            }
            for r in retrieved
        ],
    }

    lines = [
        "You are a radio resource manager for a sliced RAN.",
        f"The gNB owns {radio_cfg.total_rbs} resource blocks shared by "
        f"{len(specs)} slices.",
        "Slice status this interval:",
    ]
    for s in payload["slices"]:
        if s["kind"] == SliceKind.LATENCY.value:
            target = f"latency SLA {_fmt(s['sla_target'])} ms"
            meas = f"measured latency {_fmt(s['latency_ms'])} ms"
        else:
            target = f"throughput target {_fmt(s['sla_target'])} Mbps"
            meas = f"measured throughput {_fmt(s['throughput_mbps'])} Mbps"
        lines.append(
            f"- slice {s['slice_id']}: {target}, {meas}, "
            f"offered {_fmt(s['offered_mbps'])} Mbps, "
            f"drop ratio {_fmt(s['drop_ratio'])}, risk {_fmt(s['rho'])}"
        )
    lines.append(f"Overall compliance index: {_fmt(payload['sigma'])}")
    lines.append(
        "Current allocation shares: ["
        + ", ".join(_fmt(s) for s in payload["current_shares"])
        + "]"
    )
    if payload["examples"]:
        lines.append("Historical decisions at similar traffic (best first):")
        for ex in payload["examples"]:
            lines.append(
                "- rates ["
                + ", ".join(_fmt(r) for r in ex["rates"])
                + "] shares ["
                + ", ".join(_fmt(s) for s in ex["shares"])
                + f"] compliance {_fmt(ex['sigma'])}"
            )
    else:
        lines.append("No historical examples are available for this traffic.")
    lines.append(
        "Choose new allocation shares that restore SLA compliance. "
        'Respond with a single JSON object {"shares": [..]} whose values '
        "sum to 1, one share per slice, and nothing else."
    )
    return MetaPrompt(rendered_text="\n".join(lines), structured_payload=payload)


def parse_allocation_response(text: str, slice_count: int) -> AllocationRatio:
    """Extract and validate the first JSON object carrying a shares list.

    Sums within 0.02 of 1.0 are renormalised exactly; anything further
    off, or of the wrong shape, is a parse error.
    """
    decoder = json.JSONDecoder()
    shares = None
    for i, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and "shares" in obj:
            shares = obj["shares"]
            break
    if shares is None:
        raise ParseError("no JSON object with a 'shares' key", text)
    if not isinstance(shares, list) or len(shares) != slice_count:
        raise ParseError(f"expected a list of {slice_count} shares", text)
    try:
        values = [float(s) for s in shares]
    except (TypeError, ValueError):
        raise ParseError("shares must be numbers", text)
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ParseError("shares outside [0, 1]", text)
    total = sum(values)
    if abs(total - 1.0) > 0.02:
        raise ParseError(f"shares sum to {total}", text)
    if abs(total - 1.0) > SUM_TOLERANCE:
        values = [v / total for v in values]
        values[-1] = 1.0 - sum(values[:-1])
    return AllocationRatio(values)


class Predictor:
    """One-interval lookahead on a cloned queue state.

    Built fresh by the control loop each cycle, so predictions never
    mutate the live simulation.
    """

    def __init__(
        self,
        offered_mbps: Sequence[float],
        channels: Sequence[UeChannelState],
        radio_cfg: RadioConfig,
        queue_cfg: QueueConfig,
        specs: Sequence[SliceSpec],
        state: SimState,
    ) -> None:
        self.offered_mbps = list(offered_mbps)
        self.channels = list(channels)
        self.radio_cfg = radio_cfg
        self.queue_cfg = queue_cfg
        self.specs = list(specs)
        self._state = state

    def predict(self, rb_counts: Sequence[int]):
        """Predicted KpmSample for the next interval under rb_counts."""
        result = simulate_interval(
            self.offered_mbps,
            rb_counts,
            self.channels,
            self.radio_cfg,
            self.queue_cfg,
            self._state.clone(),
        )
        return result.kpm

    def score(self, rb_counts: Sequence[int]) -> tuple[float, float, float]:
        """(predicted sigma, violation excess, throughput-slice throughput).

        The violation excess sums how far each slice's violation level
        sits beyond its SLA boundary (positive direction for latency
        slices, negative for throughput slices).  It is zero whenever
        every slice complies, and it grades candidates apart when deep
        violations saturate the sigmoid and flatten sigma.
        """
        kpm = self.predict(rb_counts)
        a = assess([kpm], self.specs, self.radio_cfg.violation_threshold)
        excess = 0.0
        for k, spec in enumerate(self.specs):
            eps = a.slices[k].epsilon
            if spec.kind is SliceKind.LATENCY:
                if math.isinf(eps):
                    eps = 1e6
                excess += max(0.0, eps)
            else:
                excess += max(0.0, -eps)
        thr = sum(
            kpm.slices[k].mean_throughput_mbps
            for k, spec in enumerate(self.specs)
            if spec.kind is SliceKind.THROUGHPUT
        )
        return a.sigma, excess, thr


def heuristic_oracle_decide(
    payload: dict,
    predictor: Predictor,
) -> AllocationRatio:
    """Grid search over the latency slice's share, scored by predicted sigma.

    Candidates are every integer RB count for the latency slice from 1 to
    total - 1, plus the current allocation.  Ties on predicted sigma go
    to the candidate with the smallest violation excess (which grades
    candidates apart when deep violations saturate the sigmoid), then to
    the higher predicted throughput for the throughput slices, then to
    the fewest RBs moved.

    Scores are rounded before comparison (sigma to 1e-6, excess to 1e-3,
    throughput to 0.1 Mbps) so that packet-quantisation noise in the
    rollout does not break ties that are physically meaningless; when
    every candidate on a safe plateau scores the same, the fewest-moved
    rule keeps the current allocation.
    """
    specs = predictor.specs
    if len(specs) != 2:
        raise ValueError("the heuristic oracle supports exactly two slices")
    latency_idx = next(
        k for k, s in enumerate(specs) if s.kind is SliceKind.LATENCY
    )
    total = predictor.radio_cfg.total_rbs
    current = ratio_to_rb_counts(
        AllocationRatio(payload["current_shares"]), total
    )
    current_lat = current[latency_idx]

    best = None
    candidates = list(range(1, total))
    if current_lat not in candidates:
        candidates.append(current_lat)
    for i in candidates:
        counts = [0, 0]
        counts[latency_idx] = i
        counts[1 - latency_idx] = total - i
        sigma, excess, thr = predictor.score(counts)
        key = (round(sigma, 6), -round(excess, 3), round(thr, 1),
               -abs(i - current_lat))
        if best is None or key > best[0]:
            best = (key, i)
    chosen = best[1]
    shares = [0.0, 0.0]
    shares[latency_idx] = chosen / total
    shares[1 - latency_idx] = 1.0 - chosen / total
    return AllocationRatio(shares)


class Backend(Protocol):
    label: str

    def propose(
        self, prompt: MetaPrompt, predictor: Optional[Predictor] = None
    ) -> DecisionOutcome: ...


class HeuristicOracleBackend:
    """Deterministic offline stand-in for the LLM."""

    label = "oracle"

    def propose(
        self, prompt: MetaPrompt, predictor: Optional[Predictor] = None
    ) -> DecisionOutcome:
        if predictor is None:
            raise BackendError("the oracle backend needs a predictor")
        allocation = heuristic_oracle_decide(prompt.structured_payload, predictor)
        response = json.dumps({"shares": list(allocation.shares)})
        return DecisionOutcome(
            allocation=allocation,
            prompt_tokens=count_tokens(prompt.rendered_text),
            completion_tokens=count_tokens(response),
            backend_label=self.label,
            raw_response=response,
        )


class ScriptedBackend:
    """Replays an ordered list of decisions, e.g. loaded from JSON."""

    label = "scripted"

    def __init__(self, decisions: Sequence[dict]) -> None:
        self._decisions = list(decisions)
        self._cursor = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        with open(path) as fh:
            return cls(json.load(fh))

    def propose(
        self, prompt: MetaPrompt, predictor: Optional[Predictor] = None
    ) -> DecisionOutcome:
        if self._cursor >= len(self._decisions):
            raise BackendError("scripted backend exhausted")
        entry = self._decisions[self._cursor]
        self._cursor += 1
        slice_count = len(prompt.structured_payload["current_shares"])
        allocation = AllocationRatio(entry["shares"])
        if len(allocation) != slice_count:
            raise ParseError("scripted shares have the wrong length", str(entry))
        return DecisionOutcome(
            allocation=allocation,
            prompt_tokens=entry.get("prompt_tokens", count_tokens(prompt.rendered_text)),
            completion_tokens=entry.get("completion_tokens", 0),
            backend_label=self.label,
            raw_response=json.dumps(entry),
        )


class RemoteBackend:
    """Chat-completion client: one retry with an error suffix on bad output."""

    label = "remote"

    def __init__(
        self,
        endpoint_url: str,
        model: str,
        temperature: float = 0.0,
        max_tokens: int = 256,
        timeout_s: float = 30.0,
        session=None,
    ) -> None:
        if session is None:
            import requests

            session = requests.Session()
        self.endpoint_url = endpoint_url
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout_s = timeout_s
        self.session = session

    def _call(self, messages: list[dict]) -> tuple[str, int, int]:
        import requests

        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        try:
            resp = self.session.post(
                self.endpoint_url, json=body, headers=headers, timeout=self.timeout_s
            )
        except requests.Timeout as exc:
            raise BackendTimeoutError(str(exc)) from exc
        except requests.RequestException as exc:
            raise BackendError(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendError(f"endpoint returned {resp.status_code}: {resp.text}")
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
        usage = data.get("usage", {})
        return content, usage.get("prompt_tokens", 0), usage.get("completion_tokens", 0)

    def propose(
        self, prompt: MetaPrompt, predictor: Optional[Predictor] = None
    ) -> DecisionOutcome:
        slice_count = len(prompt.structured_payload["current_shares"])
        messages = [{"role": "user", "content": prompt.rendered_text}]
        content, p_tok, c_tok = self._call(messages)
        try:
            allocation = parse_allocation_response(content, slice_count)
        except ParseError as first_error:
            retry = messages + [
                {"role": "assistant", "content": content},
                {
                    "role": "user",
                    "content": "Your previous reply was not a valid allocation "
                    f"({first_error}). Respond with only the JSON object "
                    '{"shares": [..]}.',
                },
            ]
            content2, p2, c2 = self._call(retry)
            allocation = parse_allocation_response(content2, slice_count)
            return DecisionOutcome(
                allocation=allocation,
                prompt_tokens=p_tok + p2,
                completion_tokens=c_tok + c2,
                backend_label=self.label,
                raw_response=content2,
            )
        return DecisionOutcome(
            allocation=allocation,
            prompt_tokens=p_tok,
            completion_tokens=c_tok,
            backend_label=self.label,
            raw_response=content,
        )
