"""Alternating-offers negotiation engine for two repeated games.

Two agents negotiate over up to ``H`` turns per episode. On its turn an
agent either makes a proposal, accepts or rejects the opponent's standing
proposal, or waits; every action additionally carries one message token
from a finite alphabet. An episode ends on accept, on reject, or when the
turn budget runs out; rejected and timed-out episodes pay (0, 0).

Supported games:

* ``buyer_seller`` -- one item, seller with production cost ``p``, buyer
  with budget ``b``. A deal at price ``q`` pays the seller ``q - p`` and
  the buyer ``b - q``.
* ``resource_exchange`` -- each agent holds quantities of goods X and Y
  with private per-unit valuations. A proposal is a signed pair
  ``(dx, dy)`` meaning the net transfer *to agent 1*; a deal pays each
  agent the net change in the total value of its holdings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Iterable, Optional, Tuple

DEFAULT_MESSAGE_ALPHABET = (
    "greeting",
    "anchor_high",
    "appeal_fairness",
    "insult",
    "flatter",
    "deadline_pressure",
    "small_concession",
    "final_offer",
)


class ProtocolError(Exception):
    """An action was applied in a state where the protocol forbids it."""


class InvalidSpecError(ValueError):
    """Game parameters violate a GameSpec invariant."""


class Variant(str, Enum):
    BUYER_SELLER = "buyer_seller"
    RESOURCE_EXCHANGE = "resource_exchange"


class Kind(str, Enum):
    OFFER = "offer"
    ACCEPT = "accept"
    REJECT = "reject"
    WAIT = "wait"


class Cause(str, Enum):
    ONGOING = "ongoing"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    HORIZON_EXCEEDED = "horizon_exceeded"


@dataclass(frozen=True)
class GameSpec:
    """Static parameters of one negotiation game.

    ``price_grid`` (buyer-seller) and ``transfer_grid`` (resource exchange)
    pin the finite proposal spaces; keeping them finite is what lets the
    oracle module enumerate trajectory trees exactly.
    """

    variant: Variant = Variant.BUYER_SELLER
    horizon: int = 10
    starter: int = 1
    # buyer-seller parameters
    production_cost: float = 43.0
    budget: float = 63.0
    agent1_role: str = "seller"  # "seller" or "buyer"
    price_grid: Tuple[float, ...] = tuple(float(q) for q in range(0, 101))
    # resource-exchange parameters: inventories n and per-unit values v
    n1x: int = 25
    n1y: int = 5
    n2x: int = 5
    n2y: int = 25
    v1x: float = 0.5
    v1y: float = 2.5
    v2x: float = 2.5
    v2y: float = 0.5
    # optional explicit proposal set; None means every in-bounds integer pair
    transfer_grid: Optional[Tuple[Tuple[int, int], ...]] = None
    # reward scale for normalize_rewards in the exchange game
    exchange_norm: Optional[float] = None
    message_alphabet: Tuple[str, ...] = DEFAULT_MESSAGE_ALPHABET

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidSpecError("horizon must be >= 1")
        if self.starter not in (1, 2):
            raise InvalidSpecError("starter must be 1 or 2")
        if not self.message_alphabet:
            raise InvalidSpecError("message alphabet must be nonempty")
        if self.variant == Variant.BUYER_SELLER:
            if self.budget < 0 or self.production_cost < 0:
                raise InvalidSpecError("budget and cost must be nonnegative")
            if not self.price_grid:
                raise InvalidSpecError("price grid must be nonempty")
            if self.agent1_role not in ("seller", "buyer"):
                raise InvalidSpecError("agent1_role must be seller or buyer")
        else:
            for n in (self.n1x, self.n1y, self.n2x, self.n2y):
                if n < 0 or int(n) != n:
                    raise InvalidSpecError("inventories must be nonnegative integers")
            for v in (self.v1x, self.v1y, self.v2x, self.v2y):
                if v < 0:
                    raise InvalidSpecError("valuations must be nonnegative")
            if self.transfer_grid is not None and not self.transfer_grid:
                raise InvalidSpecError("transfer grid must be nonempty when given")

    # -- proposal space -------------------------------------------------

    def transfer_bounds(self) -> Tuple[int, int, int, int]:
        """Inventory box for (dx, dy): dx in [-n1x, n2x], dy in [-n1y, n2y]."""
        return (-self.n1x, self.n2x, -self.n1y, self.n2y)

    def transfers(self) -> Tuple[Tuple[int, int], ...]:
        """The finite proposal set for the exchange game."""
        if self.transfer_grid is not None:
            return self.transfer_grid
        lo_x, hi_x, lo_y, hi_y = self.transfer_bounds()
        return tuple(
            (dx, dy)
            for dx in range(lo_x, hi_x + 1)
            for dy in range(lo_y, hi_y + 1)
        )

    def offer_payloads(self) -> Tuple[object, ...]:
        if self.variant == Variant.BUYER_SELLER:
            return self.price_grid
        return self.transfers()

    def surplus(self) -> float:
        """Total pie in the buyer-seller game: budget minus cost."""
        return self.budget - self.production_cost


@dataclass(frozen=True)
class Action:
    """One turn's output: a structured proposal part plus a message token."""

    kind: Kind
    price: Optional[float] = None
    dx: Optional[int] = None
    dy: Optional[int] = None
    message: str = "greeting"

    def payload(self):
        if self.kind != Kind.OFFER:
            return None
        return self.price if self.price is not None else (self.dx, self.dy)

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "message": self.message}
        if self.price is not None:
            out["price"] = self.price
        if self.dx is not None:
            out["dx"] = self.dx
            out["dy"] = self.dy
        return out

    @staticmethod
    def from_json(doc: dict) -> "Action":
        return Action(
            kind=Kind(doc["kind"]),
            price=doc.get("price"),
            dx=doc.get("dx"),
            dy=doc.get("dy"),
            message=doc.get("message", "greeting"),
        )

    @staticmethod
    def offer(payload, message: str) -> "Action":
        if isinstance(payload, tuple):
            return Action(Kind.OFFER, dx=int(payload[0]), dy=int(payload[1]), message=message)
        return Action(Kind.OFFER, price=float(payload), message=message)


@dataclass(frozen=True)
class StandingOffer:
    payload: object  # price or (dx, dy)
    proposer: int
    message: str


@dataclass(frozen=True)
class EpisodeState:
    """Partial trajectory plus everything needed to continue the episode."""

    spec: GameSpec
    h: int = 1
    trajectory: Tuple[Tuple[int, Action], ...] = ()
    standing: Optional[StandingOffer] = None
    cause: Cause = Cause.ONGOING
    deal: Optional[object] = None  # accepted payload

    @property
    def terminal(self) -> bool:
        return self.cause != Cause.ONGOING

    @property
    def actor(self) -> int:
        return whose_turn(self.h, self.spec.starter)

    def last_message(self) -> Optional[str]:
        if not self.trajectory:
            return None
        return self.trajectory[-1][1].message


def whose_turn(h: int, starter: int) -> int:
    """Agent to move at turn h under strict alternation."""
    if h < 1:
        raise ProtocolError("turn index starts at 1")
    if starter == 1:
        return 2 - (h % 2)
    return 1 + (h % 2)


def new_episode(spec: GameSpec) -> EpisodeState:
    return EpisodeState(spec=spec)


def validate_action(state: EpisodeState, action: Action) -> Tuple[bool, str]:
    """Legality verdict for `action` in `state`; (True, "") when legal."""
    if state.terminal:
        raise ProtocolError("episode already terminal")
    spec = state.spec
    if action.message not in spec.message_alphabet:
        return False, f"message {action.message!r} not in alphabet"
    if action.kind in (Kind.ACCEPT, Kind.REJECT):
        if state.standing is None:
            return False, "no standing offer to answer"
        if state.standing.proposer == state.actor:
            return False, "cannot answer one's own offer"
        return True, ""
    if action.kind == Kind.WAIT:
        return True, ""
    # offer
    if spec.variant == Variant.BUYER_SELLER:
        if action.price is None or action.price not in spec.price_grid:
            return False, f"price {action.price!r} not on the grid"
        return True, ""
    if action.dx is None or action.dy is None:
        return False, "exchange offer needs dx and dy"
    lo_x, hi_x, lo_y, hi_y = spec.transfer_bounds()
    if not (lo_x <= action.dx <= hi_x and lo_y <= action.dy <= hi_y):
        return False, f"transfer ({action.dx},{action.dy}) violates inventory bounds"
    if spec.transfer_grid is not None and (action.dx, action.dy) not in spec.transfer_grid:
        return False, f"transfer ({action.dx},{action.dy}) not in the proposal set"
    return True, ""


def legal_actions(state: EpisodeState) -> Tuple[Action, ...]:
    """All legal actions, in a fixed deterministic order.

    Order: Accept, Reject (when answerable), every offer payload in grid
    order, Wait -- each crossed with the message alphabet in order. Oracle
    tie-breaking ("smallest index") refers to this ordering.
    """
    spec = state.spec
    out = []
    answerable = state.standing is not None and state.standing.proposer != state.actor
    for msg in spec.message_alphabet:
        if answerable:
            out.append(Action(Kind.ACCEPT, message=msg))
            out.append(Action(Kind.REJECT, message=msg))
    for payload in spec.offer_payloads():
        for msg in spec.message_alphabet:
            out.append(Action.offer(payload, msg))
    for msg in spec.message_alphabet:
        out.append(Action(Kind.WAIT, message=msg))
    return tuple(out)


def apply_action(state: EpisodeState, action: Action) -> EpisodeState:
    """Advance the episode by one turn; raises ProtocolError on illegal input."""
    ok, why = validate_action(state, action)
    if not ok:
        raise ProtocolError(why)
    actor = state.actor
    trajectory = state.trajectory + ((actor, action),)
    if action.kind == Kind.ACCEPT:
        return replace(
            state,
            trajectory=trajectory,
            cause=Cause.ACCEPTED,
            deal=state.standing.payload,
            standing=None,
        )
    if action.kind == Kind.REJECT:
        return replace(state, trajectory=trajectory, cause=Cause.REJECTED, standing=None)
    standing = state.standing
    if action.kind == Kind.OFFER:
        standing = StandingOffer(action.payload(), actor, action.message)
    h = state.h + 1
    cause = Cause.ONGOING if h <= state.spec.horizon else Cause.HORIZON_EXCEEDED
    return replace(state, h=h, trajectory=trajectory, standing=standing, cause=cause)


@dataclass(frozen=True)
class RewardPair:
    r1: float
    r2: float
    normalized_1: float = 0.0
    normalized_2: float = 0.0


def deal_rewards(spec: GameSpec, payload) -> Tuple[float, float]:
    """Raw (agent 1, agent 2) rewards for an accepted payload."""
    if spec.variant == Variant.BUYER_SELLER:
        q = float(payload)
        seller = q - spec.production_cost
        buyer = spec.budget - q
        return (seller, buyer) if spec.agent1_role == "seller" else (buyer, seller)
    dx, dy = payload
    r1 = spec.v1x * dx + spec.v1y * dy
    r2 = -spec.v2x * dx - spec.v2y * dy
    return r1, r2


def episode_rewards(state: EpisodeState) -> RewardPair:
    """Terminal rewards; non-deal terminals pay (0, 0)."""
    if not state.terminal:
        raise ProtocolError("rewards are defined only at terminal states")
    if state.cause != Cause.ACCEPTED:
        pair = RewardPair(0.0, 0.0)
    else:
        r1, r2 = deal_rewards(state.spec, state.deal)
        pair = RewardPair(r1, r2)
    return normalize_rewards(pair, state.spec)


def normalize_rewards(pair: RewardPair, spec: GameSpec) -> RewardPair:
    """Fill the normalized fields by dividing by the game's reward scale."""
    if spec.variant == Variant.BUYER_SELLER:
        scale = spec.surplus()
        if scale == 0:
            raise ZeroDivisionError("budget equals cost; surplus is zero")
    else:
        if spec.exchange_norm is None:
            raise InvalidSpecError("exchange_norm not configured for this spec")
        scale = spec.exchange_norm
        if scale == 0:
            raise ZeroDivisionError("exchange_norm is zero")
    return replace(pair, normalized_1=pair.r1 / scale, normalized_2=pair.r2 / scale)


# -- repeated-game context ----------------------------------------------


@dataclass(frozen=True)
class EpisodeRecord:
    trajectory: Tuple[Tuple[int, Action], ...]
    cause: Cause
    deal: Optional[object]
    rewards: RewardPair


Context = Tuple[EpisodeRecord, ...]

EMPTY_CONTEXT: Context = ()


def record_episode(state: EpisodeState) -> EpisodeRecord:
    if not state.terminal:
        raise ProtocolError("cannot record a non-terminal episode")
    return EpisodeRecord(state.trajectory, state.cause, state.deal, episode_rewards(state))


def append_context(context: Context, record: EpisodeRecord) -> Context:
    return context + (record,)


def replay(spec: GameSpec, actions: Iterable[Action]) -> EpisodeState:
    """Re-run a stored action sequence; returns the resulting state."""
    state = new_episode(spec)
    for action in actions:
        state = apply_action(state, action)
    return state


# -- trajectory log (JSON lines) ------------------------------------------


def write_turn_record(fh: IO[str], episode: int, h: int, agent: int, action: Action):
    doc = {
        "episode": episode,
        "h": h,
        "agent": agent,
        "proposal_kind": action.kind.value,
        "payload": action.payload() if not isinstance(action.payload(), tuple) else list(action.payload()),
        "message": action.message,
    }
    fh.write(json.dumps(doc) + "\n")


def write_terminal_record(fh: IO[str], episode: int, record: EpisodeRecord):
    deal = record.deal
    if isinstance(deal, tuple):
        deal = list(deal)
    doc = {
        "episode": episode,
        "cause": record.cause.value,
        "deal_payload": deal,
        "r1": record.rewards.r1,
        "r2": record.rewards.r2,
    }
    fh.write(json.dumps(doc) + "\n")


def run_episode(spec: GameSpec, act_fn_by_agent, context: Context = EMPTY_CONTEXT,
                on_turn=None) -> EpisodeState:
    """Play one episode to termination.

    ``act_fn_by_agent`` maps agent id -> callable(state) -> Action; the
    callables close over whatever context / randomness they need.
    """
    state = new_episode(spec)
    while not state.terminal:
        agent = state.actor
        action = act_fn_by_agent[agent](state)
        if on_turn is not None:
            on_turn(state, agent, action)
        state = apply_action(state, action)
    return state
