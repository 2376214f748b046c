"""Wire schema for external policy processes.

Requests and responses are single JSON objects. Field names are part of
the contract:

    request  {"kind", "role", "template_id", "private_info", "context",
              "trajectory", "candidates", "nonce"}
    response {"proposal": {"kind", "price" | "dx", "dy"}, "message",
              "chosen_index", "thoughts"}

``kind`` is one of act / simulate_opponent / evaluate_candidates. The
evaluator's ``chosen_index`` is the 1-based candidate number, exactly as
declared in its final "[x]" line. Serialization is stable: the same
decision point yields a byte-identical body apart from the nonce.
"""
from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from typing import Optional

from ..env import Action, Context, EpisodeState, Kind, validate_action

KINDS = ("act", "simulate_opponent", "evaluate_candidates")


class MalformedResponse(ValueError):
    """Response cannot be interpreted as a legal action or a valid index."""


@dataclass
class BridgeRequest:
    kind: str
    role: int
    template_id: str
    private_info: str
    context: list
    trajectory: list
    candidates: Optional[list] = None
    nonce: str = field(default_factory=lambda: uuid.uuid4().hex)

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "role": self.role,
            "template_id": self.template_id,
            "private_info": self.private_info,
            "context": self.context,
            "trajectory": self.trajectory,
            "candidates": self.candidates,
            "nonce": self.nonce,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BridgeRequest":
        doc = json.loads(text)
        kind = doc.get("kind")
        if kind not in KINDS:
            raise MalformedResponse(f"unknown request kind {kind!r}")
        return BridgeRequest(
            kind=kind,
            role=int(doc["role"]),
            template_id=doc.get("template_id", ""),
            private_info=doc.get("private_info", ""),
            context=doc.get("context", []),
            trajectory=doc.get("trajectory", []),
            candidates=doc.get("candidates"),
            nonce=doc.get("nonce", ""),
        )


@dataclass
class BridgeResponse:
    proposal: Optional[dict] = None
    message: str = ""
    chosen_index: Optional[int] = None
    thoughts: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "proposal": self.proposal,
            "message": self.message,
            "chosen_index": self.chosen_index,
            "thoughts": self.thoughts,
        }, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BridgeResponse":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"response is not JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise MalformedResponse("response must be a JSON object")
        return BridgeResponse(
            proposal=doc.get("proposal"),
            message=doc.get("message", ""),
            chosen_index=doc.get("chosen_index"),
            thoughts=doc.get("thoughts", ""),
        )


# -- serialization of game objects ------------------------------------------


def action_to_wire(action: Action) -> dict:
    proposal = {"kind": action.kind.value}
    if action.price is not None:
        proposal["price"] = action.price
    if action.dx is not None:
        proposal["dx"] = action.dx
        proposal["dy"] = action.dy
    return {"proposal": proposal, "message": action.message}


def action_from_wire(proposal: dict, message: str, state: EpisodeState) -> Action:
    if not isinstance(proposal, dict) or "kind" not in proposal:
        raise MalformedResponse("proposal must carry a kind")
    try:
        kind = Kind(proposal["kind"])
    except ValueError as exc:
        raise MalformedResponse(f"unknown proposal kind {proposal['kind']!r}") from exc
    action = Action(
        kind=kind,
        price=float(proposal["price"]) if proposal.get("price") is not None else None,
        dx=int(proposal["dx"]) if proposal.get("dx") is not None else None,
        dy=int(proposal["dy"]) if proposal.get("dy") is not None else None,
        message=message or state.spec.message_alphabet[0],
    )
    ok, why = validate_action(state, action)
    if not ok:
        raise MalformedResponse(f"illegal action: {why}")
    return action


def trajectory_to_wire(trajectory) -> list:
    out = []
    for h, (agent, action) in enumerate(trajectory, start=1):
        doc = {"h": h, "agent": agent}
        doc.update(action_to_wire(action))
        out.append(doc)
    return out


def context_to_wire(context: Context) -> list:
    out = []
    for t, record in enumerate(context, start=1):
        deal = record.deal
        if isinstance(deal, tuple):
            deal = list(deal)
        out.append({
            "episode": t,
            "cause": record.cause.value,
            "deal": deal,
            "r1": record.rewards.r1,
            "r2": record.rewards.r2,
            "turns": trajectory_to_wire(record.trajectory),
        })
    return out


def response_action(response: BridgeResponse, state: EpisodeState) -> Action:
    if response.proposal is None:
        raise MalformedResponse("act response carries no proposal")
    return action_from_wire(response.proposal, response.message, state)


def response_index(response: BridgeResponse, n_candidates: int) -> int:
    """Validated 1-based evaluator choice."""
    idx = response.chosen_index
    if not isinstance(idx, int) or isinstance(idx, bool):
        raise MalformedResponse("evaluate response carries no integer chosen_index")
    if not 1 <= idx <= n_candidates:
        raise MalformedResponse(f"chosen_index {idx} outside 1..{n_candidates}")
    return idx
