from .conformance import ConformanceReport, conformance_suite
from .protocol import (
    BridgeRequest,
    BridgeResponse,
    MalformedResponse,
    action_from_wire,
    action_to_wire,
    context_to_wire,
    response_action,
    response_index,
    trajectory_to_wire,
)
from .provider import (
    ExternalPolicy,
    HttpTransport,
    Incident,
    SubprocessTransport,
    TransportError,
    spawn_external_policy,
)
from .server import serve_provider
from .templates import format_history, load_template, render, render_request_text

__all__ = [
    "BridgeRequest", "BridgeResponse", "ConformanceReport", "ExternalPolicy",
    "HttpTransport", "Incident", "MalformedResponse", "SubprocessTransport",
    "TransportError", "action_from_wire", "action_to_wire", "conformance_suite",
    "context_to_wire", "format_history", "load_template", "render",
    "render_request_text", "response_action", "response_index", "serve_provider",
    "spawn_external_policy", "trajectory_to_wire",
]
