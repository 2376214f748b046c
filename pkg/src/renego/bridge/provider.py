"""PolicyProvider backed by an external process speaking the wire schema."""
from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import urllib.request
from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..env import Action, Context, EpisodeState, GameSpec, Kind
from .protocol import (
    BridgeRequest,
    BridgeResponse,
    MalformedResponse,
    action_to_wire,
    context_to_wire,
    response_action,
    response_index,
    trajectory_to_wire,
)
from .templates import render_request_text

log = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """The external process is unreachable or broke the framing."""


class SubprocessTransport:
    """One JSON object per line over a child process's standard streams."""

    def __init__(self, argv: Sequence[str], timeout: float = 10.0):
        self.argv = list(argv)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1)
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def round_trip(self, request: BridgeRequest) -> BridgeResponse:
        if self._proc.poll() is not None:
            raise TransportError("external process has exited")
        try:
            self._proc.stdin.write(request.to_json() + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"write failed: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty as exc:
            raise TransportError("response timed out") from exc
        if line is None:
            raise TransportError("external process closed its stream")
        return BridgeResponse.from_json(line)

    def close(self):
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class HttpTransport:
    """POSTs the request body to /act, /simulate, or /evaluate."""

    PATHS = {"act": "/act", "simulate_opponent": "/simulate",
             "evaluate_candidates": "/evaluate"}

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def round_trip(self, request: BridgeRequest) -> BridgeResponse:
        url = self.base_url + self.PATHS[request.kind]
        data = request.to_json().encode("utf-8")
        http_request = urllib.request.Request(
            url, data=data, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(http_request, timeout=self.timeout) as reply:
                return BridgeResponse.from_json(reply.read().decode("utf-8"))
        except OSError as exc:
            raise TransportError(f"http round trip failed: {exc}") from exc

    def close(self):
        pass


@dataclass
class Incident:
    nonce: str
    reason: str
    attempt: int


class ExternalPolicy:
    """Translates decision points into bridge requests.

    Illegal or malformed responses are retried up to ``retries`` times;
    exhausting the budget substitutes a Wait so repeated-game statistics
    stay well defined. Transport failures propagate (the episode aborts).
    """

    def __init__(
        self,
        transport,
        spec: GameSpec,
        num_episodes: int,
        template_id: str = "act",
        persona_template: Optional[str] = None,
        retries: int = 2,
    ):
        self.transport = transport
        self.spec = spec
        self.num_episodes = num_episodes
        self.template_id = template_id
        self.persona_template = persona_template
        self.retries = retries
        self.incidents: List[Incident] = []

    def _request(self, kind: str, side: int, state: EpisodeState, context: Context,
                 candidates: Optional[Sequence[Action]] = None) -> BridgeRequest:
        candidate_texts = None
        wire_candidates = None
        if candidates is not None:
            wire_candidates = [action_to_wire(a) for a in candidates]
            candidate_texts = [json.dumps(c, sort_keys=True) for c in wire_candidates]
        text = render_request_text(
            self.template_id if kind == "act" else
            ("oppo_sim" if kind == "simulate_opponent" else "evaluate"),
            self.spec, side, context, state, self.num_episodes,
            candidates=candidate_texts, persona_template=self.persona_template,
        )
        return BridgeRequest(
            kind=kind,
            role=side,
            template_id=self.template_id,
            private_info=text,
            context=context_to_wire(context),
            trajectory=trajectory_to_wire(state.trajectory),
            candidates=wire_candidates,
        )

    def _ask(self, request: BridgeRequest, interpret):
        """Round-trip with retries; None when the budget is exhausted.

        Malformed or illegal responses are retried; transport failures
        propagate to the caller and abort the episode.
        """
        for attempt in range(self.retries + 1):
            try:
                response = self.transport.round_trip(request)
                return interpret(response)
            except MalformedResponse as exc:
                self.incidents.append(Incident(request.nonce, str(exc), attempt))
                log.warning("bridge response rejected (attempt %d): %s", attempt, exc)
        self.incidents.append(Incident(request.nonce, "retry budget exhausted", self.retries))
        return None

    def act(self, side: int, state: EpisodeState, context: Context, rng) -> Action:
        request = self._request("act", side, state, context)
        action = self._ask(request, lambda r: response_action(r, state))
        if action is None:
            log.warning("bridge retries exhausted; substituting Wait")
            return Action(Kind.WAIT, message=self.spec.message_alphabet[0])
        return action

    def simulate_opponent(self, side: int, state: EpisodeState, context: Context) -> Action:
        request = self._request("simulate_opponent", side, state, context)
        action = self._ask(request, lambda r: response_action(r, state))
        if action is None:
            return Action(Kind.WAIT, message=self.spec.message_alphabet[0])
        return action

    def evaluate_candidates(self, side: int, state: EpisodeState, context: Context,
                            candidates: Sequence[Action]) -> int:
        """1-based choice among the candidates; falls back to the first."""
        request = self._request("evaluate_candidates", side, state, context, candidates)
        choice = self._ask(request, lambda r: response_index(r, len(candidates)))
        return 1 if choice is None else choice

    def action_distribution(self, side, state, context):
        raise NotImplementedError("external policies expose no distribution")


def spawn_external_policy(
    spec: GameSpec,
    num_episodes: int,
    argv: Optional[Sequence[str]] = None,
    url: Optional[str] = None,
    template_id: str = "act",
    persona_template: Optional[str] = None,
    timeout: float = 10.0,
    retries: int = 2,
) -> ExternalPolicy:
    """PolicyProvider over a subprocess (argv) or an HTTP endpoint (url)."""
    if (argv is None) == (url is None):
        raise ValueError("exactly one of argv or url must be given")
    transport = SubprocessTransport(argv, timeout) if argv else HttpTransport(url, timeout)
    return ExternalPolicy(transport, spec, num_episodes, template_id,
                          persona_template, retries)
