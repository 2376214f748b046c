"""Conformance battery for external policy implementations.

Sends a fixed set of requests (all three kinds, both games, edge states)
through a transport and checks that every response parses, is legal at its
decision point, and arrives within the latency budget.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

from ..env import (
    Action,
    GameSpec,
    Kind,
    Variant,
    apply_action,
    new_episode,
    record_episode,
)
from .protocol import (
    BridgeRequest,
    MalformedResponse,
    action_to_wire,
    context_to_wire,
    response_action,
    response_index,
    trajectory_to_wire,
)
from .templates import render_request_text


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    latency: float = 0.0


@dataclass
class ConformanceReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name} "
                 f"({c.latency * 1e3:.0f} ms){': ' + c.detail if c.detail else ''}"
                 for c in self.checks]
        lines.append(f"{'PASS' if self.passed else 'FAIL'} overall "
                     f"({sum(c.passed for c in self.checks)}/{len(self.checks)})")
        return "\n".join(lines)


def _buyer_seller_spec() -> GameSpec:
    return GameSpec(variant=Variant.BUYER_SELLER, horizon=6, starter=1,
                    production_cost=43.0, budget=63.0,
                    price_grid=tuple(float(q) for q in range(0, 101)))


def _exchange_spec() -> GameSpec:
    return GameSpec(variant=Variant.RESOURCE_EXCHANGE, horizon=6, starter=1,
                    n1x=25, n1y=5, n2x=25, n2y=5,
                    v1x=0.5, v1y=2.5, v2x=2.5, v2y=0.5, exchange_norm=12.0)


def _context_of_one_episode(spec: GameSpec):
    state = new_episode(spec)
    if spec.variant == Variant.BUYER_SELLER:
        state = apply_action(state, Action.offer(55.0, spec.message_alphabet[0]))
    else:
        state = apply_action(state, Action(Kind.OFFER, dx=-1, dy=5,
                                           message=spec.message_alphabet[0]))
    state = apply_action(state, Action(Kind.ACCEPT, message=spec.message_alphabet[0]))
    return (record_episode(state),)


def _request(kind: str, spec: GameSpec, side: int, context, state,
             candidates: Optional[list] = None,
             template: Optional[str] = None) -> BridgeRequest:
    template = template or {"act": "act", "simulate_opponent": "oppo_sim",
                            "evaluate_candidates": "evaluate"}[kind]
    candidate_texts = None
    wire_candidates = None
    if candidates is not None:
        wire_candidates = [action_to_wire(a) for a in candidates]
        candidate_texts = [str(c) for c in wire_candidates]
    text = render_request_text(template, spec, side, context, state, 2,
                               candidates=candidate_texts)
    return BridgeRequest(kind=kind, role=side, template_id=template,
                         private_info=text, context=context_to_wire(context),
                         trajectory=trajectory_to_wire(state.trajectory),
                         candidates=wire_candidates)


def conformance_suite(transport, latency_budget: float = 5.0,
                      games=("buyer_seller", "resource_exchange")) -> ConformanceReport:
    """Run the battery against a reachable transport.

    Spec-bound servers (one fixed game) can restrict ``games``; full
    clients are expected to pass both.
    """
    report = ConformanceReport()

    def run(name: str, request: BridgeRequest, validate):
        start = time.monotonic()
        try:
            response = transport.round_trip(request)
            latency = time.monotonic() - start
            validate(response)
        except (MalformedResponse, Exception) as exc:  # noqa: BLE001 - report, not crash
            latency = time.monotonic() - start
            report.checks.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}",
                                             latency))
            return
        ok = latency <= latency_budget
        detail = "" if ok else f"latency {latency:.2f}s over budget"
        report.checks.append(CheckResult(name, ok, detail, latency))

    specs = {"buyer_seller": _buyer_seller_spec(),
             "resource_exchange": _exchange_spec()}
    for game in games:
        spec = specs[game]
        fresh = new_episode(spec)
        run(f"{game}/act/empty-context", _request("act", spec, 1, (), fresh),
            lambda r, s=fresh: response_action(r, s))

        context = _context_of_one_episode(spec)
        offer = (Action.offer(50.0, spec.message_alphabet[0])
                 if game == "buyer_seller"
                 else Action(Kind.OFFER, dx=-1, dy=3, message=spec.message_alphabet[0]))
        mid = apply_action(new_episode(spec), offer)
        run(f"{game}/act/standing-offer", _request("act", spec, 2, context, mid),
            lambda r, s=mid: response_action(r, s))

        run(f"{game}/simulate/standing-offer",
            _request("simulate_opponent", spec, 2, context, mid),
            lambda r, s=mid: response_action(r, s))

        candidates = [offer,
                      Action(Kind.WAIT, message=spec.message_alphabet[0]),
                      Action(Kind.ACCEPT, message=spec.message_alphabet[0])]
        run(f"{game}/evaluate/three-candidates",
            _request("evaluate_candidates", spec, 2, context, mid, candidates),
            lambda r: response_index(r, len(candidates)))

        # one-query simulation flow: the reply carries a per-candidate
        # reward list instead of a bare [x] declaration
        run(f"{game}/evaluate/self-simulate-rewards",
            _request("evaluate_candidates", spec, 2, context, mid, candidates,
                     template="self_simulate"),
            lambda r: response_index(r, len(candidates)))

    return report
