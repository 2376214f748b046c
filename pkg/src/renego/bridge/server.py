"""HTTP side of the bridge: expose a core PolicyProvider over the wire schema.

Lets external tooling (or the reference client's tests) query core
personas and search agents through POST /act, /simulate, and /evaluate
with the exact request/response bodies the subprocess transport uses.
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..env import EpisodeState, GameSpec, new_episode, apply_action
from .protocol import (
    BridgeRequest,
    BridgeResponse,
    MalformedResponse,
    action_from_wire,
    action_to_wire,
)

PATH_KINDS = {"/act": "act", "/simulate": "simulate_opponent",
              "/evaluate": "evaluate_candidates"}


def _state_from_wire(spec: GameSpec, trajectory: list) -> EpisodeState:
    state = new_episode(spec)
    for turn in trajectory:
        action = action_from_wire(turn["proposal"], turn.get("message", ""), state)
        state = apply_action(state, action)
    return state


class BridgeHandler(BaseHTTPRequestHandler):
    provider = None
    spec: GameSpec = None
    seed = 0

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def do_POST(self):
        kind = PATH_KINDS.get(self.path)
        if kind is None:
            self.send_error(404, "unknown endpoint")
            return
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length).decode("utf-8")
        try:
            request = BridgeRequest.from_json(body)
            state = _state_from_wire(self.spec, request.trajectory)
            rng = np.random.default_rng(
                np.random.SeedSequence(self.seed, spawn_key=(len(request.trajectory),)))
            if kind == "evaluate_candidates":
                candidates = request.candidates or []
                if not candidates:
                    raise MalformedResponse("evaluate request carries no candidates")
                response = BridgeResponse(chosen_index=1,
                                          thoughts="first legal candidate")
            else:
                action = self.provider.act(state.actor, state, (), rng)
                wire = action_to_wire(action)
                response = BridgeResponse(proposal=wire["proposal"],
                                          message=wire["message"])
            payload = response.to_json().encode("utf-8")
            self.send_response(200)
        except (MalformedResponse, KeyError, ValueError) as exc:
            payload = json.dumps({"error": str(exc)}).encode("utf-8")
            self.send_response(400)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def serve_provider(provider, spec: GameSpec, host: str = "127.0.0.1",
                   port: int = 0, seed: int = 0):
    """Start the HTTP bridge in a daemon thread; returns (server, base_url)."""
    handler = type("BoundBridgeHandler", (BridgeHandler,),
                   {"provider": provider, "spec": spec, "seed": seed})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://{host}:{server.server_address[1]}"
