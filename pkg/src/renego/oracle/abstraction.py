"""Finite, fully enumerable restrictions of a negotiation game.

The exact oracles walk complete trajectory trees. To make that feasible the
game is lowered to flat arrays: a canonical action-id space, a compact
observation index (turn, standing offer, last message token), terminal
values per offer payload, and CSR-style legal-action lists per observation.
Policies enter the walks as descriptors -- an observation-indexed
probability table, optionally mixed with a history-dependent pseudorandom
component -- so that the same walk runs in the compiled kernel and in the
pure-Python fallback with bit-identical results.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..env import (
    Action,
    EpisodeState,
    GameSpec,
    Kind,
    StandingOffer,
    deal_rewards,
    whose_turn,
)

DEFAULT_NODE_CAP = 2_000_000

# canonical action kinds, by id layout: accept/reject block, offers, waits
KIND_ACCEPT = 1
KIND_REJECT = 2
KIND_OFFER = 0
KIND_WAIT = 3

FNV_OFFSET = 0xCBF29CE484222325
_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def child_hash(path_hash: int, action_id: int) -> int:
    return splitmix64(path_hash ^ ((action_id + 1) & _M64))


class AbstractionTooLarge(RuntimeError):
    """The trajectory tree exceeds the configured node cap."""


@dataclass(frozen=True)
class FiniteAbstraction:
    """A GameSpec small enough for exact enumeration, plus the node cap."""

    spec: GameSpec
    node_cap: int = DEFAULT_NODE_CAP


class AbstractionTables:
    """Flat-array lowering of a FiniteAbstraction.

    Action-id layout (fixed, also the tie-break order everywhere):
      ids [0, 2M)            Accept / Reject interleaved per message token
      ids [2M, 2M + P*M)     Offer(payload p, message m), payload-major
      ids [2M + P*M, ...)    Wait per message token
    Observation index packs (turn h, standing offer, last message token).
    """

    def __init__(self, abstraction: FiniteAbstraction, normalized: bool = False):
        spec = abstraction.spec
        self.abstraction = abstraction
        self.spec = spec
        self.normalized = normalized
        self.H = spec.horizon
        self.starter = spec.starter
        self.messages = tuple(spec.message_alphabet)
        self.payloads = tuple(spec.offer_payloads())
        self.M = len(self.messages)
        self.P = len(self.payloads)
        self.n_actions = 2 * self.M + self.P * self.M + self.M
        self.n_obs = self.H * (2 * self.P + 1) * (self.M + 1)

        # terminal deal values per payload, from agent 1's point of view
        r1 = np.empty(self.P)
        r2 = np.empty(self.P)
        for i, payload in enumerate(self.payloads):
            a, b = deal_rewards(spec, payload)
            r1[i], r2[i] = a, b
        if normalized:
            if spec.variant.value == "buyer_seller":
                scale = spec.surplus()
            else:
                scale = spec.exchange_norm
            if not scale or scale <= 0:
                raise ValueError("cannot normalize: reward scale missing or zero")
            r1 = r1 / scale
            r2 = r2 / scale
        self.r1_deal = r1
        self.r2_deal = r2

        # decode tables: id -> (kind, payload index, message index)
        kind = np.empty(self.n_actions, dtype=np.int32)
        pay = np.full(self.n_actions, -1, dtype=np.int32)
        msg = np.empty(self.n_actions, dtype=np.int32)
        for m in range(self.M):
            kind[2 * m], msg[2 * m] = KIND_ACCEPT, m
            kind[2 * m + 1], msg[2 * m + 1] = KIND_REJECT, m
        base = 2 * self.M
        for p in range(self.P):
            for m in range(self.M):
                i = base + p * self.M + m
                kind[i], pay[i], msg[i] = KIND_OFFER, p, m
        base += self.P * self.M
        for m in range(self.M):
            kind[base + m], msg[base + m] = KIND_WAIT, m
        self.kind = kind
        self.pay = pay
        self.msg = msg

        # legal id lists per answerability (legality depends only on that)
        offers_and_waits = np.arange(2 * self.M, self.n_actions, dtype=np.int32)
        self.legal_answerable = np.arange(self.n_actions, dtype=np.int32)
        self.legal_plain = offers_and_waits

        # python mirrors for the pure walker (per-element numpy reads are slow)
        self.kind_list = kind.tolist()
        self.pay_list = pay.tolist()
        self.msg_list = msg.tolist()
        self.r1_deal_list = self.r1_deal.tolist()
        self.legal_lists = [self.legal_ids(obs).tolist() for obs in range(self.n_obs)]
        self.actor_list = [0] + [self.actor_at(h) for h in range(1, self.H + 1)]

    # -- observation encoding ---------------------------------------------

    def standing_code(self, pay_idx: int, proposer: int) -> int:
        """0 means no standing offer; otherwise 1 + payload with a proposer bank."""
        if pay_idx < 0:
            return 0
        return 1 + (0 if proposer == 1 else self.P) + pay_idx

    def obs_index(self, h: int, standing_pay: int, standing_proposer: int,
                  last_msg: int) -> int:
        sc = self.standing_code(standing_pay, standing_proposer)
        return ((h - 1) * (2 * self.P + 1) + sc) * (self.M + 1) + (last_msg + 1)

    def obs_of_state(self, state: EpisodeState) -> int:
        if state.standing is None:
            sp, spr = -1, 0
        else:
            sp = self.payloads.index(state.standing.payload)
            spr = state.standing.proposer
        lm = state.last_message()
        lm_idx = -1 if lm is None else self.messages.index(lm)
        return self.obs_index(state.h, sp, spr, lm_idx)

    def decode_obs(self, obs: int) -> Tuple[int, int, int, int]:
        """-> (h, standing payload idx or -1, proposer or 0, last msg idx or -1)."""
        lm = obs % (self.M + 1) - 1
        rest = obs // (self.M + 1)
        sc = rest % (2 * self.P + 1)
        h = rest // (2 * self.P + 1) + 1
        if sc == 0:
            return h, -1, 0, lm
        sc -= 1
        proposer = 1 if sc < self.P else 2
        return h, sc % self.P, proposer, lm

    def actor_at(self, h: int) -> int:
        return whose_turn(h, self.starter)

    def legal_ids(self, obs: int) -> np.ndarray:
        h, sp, proposer, _ = self.decode_obs(obs)
        answerable = sp >= 0 and proposer != self.actor_at(h)
        return self.legal_answerable if answerable else self.legal_plain

    # -- bridges to the live environment ------------------------------------

    def action_id(self, action: Action) -> int:
        m = self.messages.index(action.message)
        if action.kind == Kind.ACCEPT:
            return 2 * m
        if action.kind == Kind.REJECT:
            return 2 * m + 1
        if action.kind == Kind.OFFER:
            return 2 * self.M + self.payloads.index(action.payload()) * self.M + m
        return 2 * self.M + self.P * self.M + m

    def action_of_id(self, action_id: int) -> Action:
        k = int(self.kind[action_id])
        message = self.messages[int(self.msg[action_id])]
        if k == KIND_ACCEPT:
            return Action(Kind.ACCEPT, message=message)
        if k == KIND_REJECT:
            return Action(Kind.REJECT, message=message)
        if k == KIND_WAIT:
            return Action(Kind.WAIT, message=message)
        return Action.offer(self.payloads[int(self.pay[action_id])], message)

    def synthetic_state(self, obs: int) -> EpisodeState:
        """Minimal EpisodeState consistent with an observation index.

        Only (h, standing offer, last message) are faithful; the trajectory
        holds one filler turn when a last message exists. Suitable for
        observation-measurable providers.
        """
        h, sp, proposer, lm = self.decode_obs(obs)
        standing = None
        if sp >= 0:
            standing = StandingOffer(self.payloads[sp], proposer, self.messages[0])
        trajectory: Tuple = ()
        if lm >= 0:
            prev_actor = self.actor_at(h - 1) if h > 1 else self.actor_at(h)
            filler = Action(Kind.WAIT, message=self.messages[lm])
            trajectory = ((prev_actor, filler),)
        return EpisodeState(spec=self.spec, h=h, trajectory=trajectory,
                            standing=standing)


@dataclass
class PolicyDescriptor:
    """Walkable policy: an observation table, optionally mixed with a
    history-dependent pseudorandom component of weight ``delta``.

    The pseudorandom part puts weight on ``hash_k`` legal actions chosen by
    hashing the trajectory path, which makes the policy genuinely
    non-Markov over observations -- the stress case for Theorem-style
    bound checks.
    """

    table: np.ndarray  # [n_obs, n_actions], row nonzero only on legal ids
    delta: float = 0.0
    hash_seed: int = 0
    hash_k: int = 2

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must be in [0, 1]")
        if self.hash_k < 1:
            raise ValueError("hash_k must be >= 1")

    def support(self) -> List[np.ndarray]:
        """Per-obs nonzero table ids (ascending), precomputed for the walks."""
        return [np.nonzero(row)[0].astype(np.int32) for row in self.table]


class PreparedPolicy:
    """Descriptor lowered to CSR support lists, shared by both kernels.

    ``probs`` are pre-scaled by (1 - delta); the hash component is added at
    walk time. Keeping the scaling here guarantees the compiled and pure
    walkers consume identical doubles.
    """

    def __init__(self, tables: AbstractionTables, desc: PolicyDescriptor):
        self.delta = float(desc.delta)
        self.hash_seed = int(desc.hash_seed) & _M64
        self.hash_k = int(desc.hash_k)
        if self.hash_k > 8:
            raise ValueError("hash_k above 8 is not supported")
        scale = 1.0 - self.delta
        ptr = np.zeros(tables.n_obs + 1, dtype=np.int64)
        ids: List[int] = []
        probs: List[float] = []
        for obs in range(tables.n_obs):
            legal = set(tables.legal_lists[obs])
            row = desc.table[obs]
            row_sum = 0.0
            for aid in np.nonzero(row)[0]:
                if int(aid) not in legal:
                    raise ValueError(f"table puts mass on illegal action {aid} at obs {obs}")
                ids.append(int(aid))
                probs.append(scale * float(row[aid]))
                row_sum += float(row[aid])
            if row_sum != 0.0 and abs(row_sum - 1.0) > 1e-9:
                raise ValueError(f"table row at obs {obs} sums to {row_sum}, not 1")
            ptr[obs + 1] = len(ids)
        self.ptr = ptr
        self.ids = np.asarray(ids, dtype=np.int32)
        self.probs = np.asarray(probs, dtype=np.float64)
        # python mirrors for the pure walker
        self.ptr_list = ptr.tolist()
        self.ids_list = self.ids.tolist()
        self.probs_list = self.probs.tolist()

    def max_support(self, tables: AbstractionTables) -> int:
        """Worst-case per-node support size (for node-count estimates)."""
        widths = np.diff(self.ptr)
        base = int(widths.max()) if len(widths) else 0
        return base + (self.hash_k if self.delta > 0 else 0)


def hash_component(tables: AbstractionTables, desc: PolicyDescriptor,
                   path_hash: int, obs: int) -> dict:
    """Pseudorandom part of a descriptor's distribution at a node.

    Returns {action_id: probability}; identical arithmetic to the kernels.
    """
    legal = tables.legal_ids(obs)
    n_legal = len(legal)
    hs = splitmix64((path_hash ^ desc.hash_seed) & _M64)
    weights: dict = {}
    total = 0.0
    for j in range(desc.hash_k):
        r = splitmix64((hs + j) & _M64)
        slot = int(legal[r % n_legal])
        w = (r >> 11) * (1.0 / 9007199254740992.0) + 0.25
        weights[slot] = weights.get(slot, 0.0) + w
        total += w
    return {slot: w / total for slot, w in weights.items()}


def descriptor_distribution(tables: AbstractionTables, desc: PolicyDescriptor,
                            obs: int, path_hash: int) -> dict:
    """Full {action_id: prob} of a descriptor at a node (reference path)."""
    out = {}
    row = desc.table[obs]
    for aid in np.nonzero(row)[0]:
        out[int(aid)] = (1.0 - desc.delta) * float(row[aid])
    if desc.delta > 0.0:
        for slot, w in hash_component(tables, desc, path_hash, obs).items():
            out[slot] = out.get(slot, 0.0) + desc.delta * w
    return out


def random_table_policy(tables: AbstractionTables, rng: np.random.Generator,
                        max_support: int = 3) -> np.ndarray:
    """Random observation table with small per-obs support."""
    table = np.zeros((tables.n_obs, tables.n_actions))
    for obs in range(tables.n_obs):
        legal = tables.legal_ids(obs)
        size = int(rng.integers(1, min(max_support, len(legal)) + 1))
        ids = rng.choice(legal, size=size, replace=False)
        probs = rng.dirichlet(np.ones(size))
        table[obs, np.sort(ids)] = probs[np.argsort(ids)]
    return table


def uniform_table_policy(tables: AbstractionTables) -> np.ndarray:
    table = np.zeros((tables.n_obs, tables.n_actions))
    for obs in range(tables.n_obs):
        legal = tables.legal_ids(obs)
        table[obs, legal] = 1.0 / len(legal)
    return table


def lower_provider_to_table(tables: AbstractionTables, provider, side: int) -> np.ndarray:
    """Tabulate an observation-measurable provider over all its turns."""
    table = np.zeros((tables.n_obs, tables.n_actions))
    for obs in range(tables.n_obs):
        h, _, _, _ = tables.decode_obs(obs)
        if tables.actor_at(h) != side:
            continue
        state = tables.synthetic_state(obs)
        for action, prob in provider.action_distribution(side, state, ()):
            table[obs, tables.action_id(action)] += prob
    return table


class TableProvider:
    """PolicyProvider view of a descriptor, for the reference recursion."""

    def __init__(self, tables: AbstractionTables, desc: PolicyDescriptor):
        self.tables = tables
        self.desc = desc

    def _path_hash(self, state: EpisodeState) -> int:
        ph = FNV_OFFSET
        for _, action in state.trajectory:
            ph = child_hash(ph, self.tables.action_id(action))
        return ph

    def action_distribution(self, side, state, context):
        obs = self.tables.obs_of_state(state)
        dist = descriptor_distribution(self.tables, self.desc, obs,
                                       self._path_hash(state))
        return [(self.tables.action_of_id(aid), p)
                for aid, p in sorted(dist.items()) if p > 0]

    def act(self, side, state, context, rng):
        dist = self.action_distribution(side, state, context)
        probs = np.asarray([p for _, p in dist])
        return dist[int(rng.choice(len(dist), p=probs / probs.sum()))][0]
