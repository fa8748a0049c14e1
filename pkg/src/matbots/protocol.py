"""Wire schema for the streaming gateway.

Messages are JSON text frames over a WebSocket. Every message is an object
with ``type``, ``schema`` and ``payload``; ``world_state`` and ``metrics``
messages also carry the simulation ``tick``. The UI consumes this schema
verbatim, so it is versioned and round-trip tested.
"""

from __future__ import annotations

import json

PROTOCOL_SCHEMA_VERSION = 1

MESSAGE_TYPES = ("world_state", "metrics", "hand_input", "control", "control_ack", "error")

CONTROL_ACTIONS = ("pause", "resume", "reset", "load_scene", "set_robots",
                   "grasp", "place", "set_calibration")


class ProtocolError(ValueError):
    """Message violates the stream schema."""


def encode_message(msg_type: str, payload: dict, tick: int | None = None) -> str:
    if msg_type not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg_type!r}")
    doc = {"type": msg_type, "schema": PROTOCOL_SCHEMA_VERSION, "payload": payload}
    if tick is not None:
        doc["tick"] = tick
    return json.dumps(doc, separators=(",", ":"))


def decode_message(text: str | bytes) -> dict:
    """Parse and validate one frame; raises :class:`ProtocolError` on any
    schema violation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProtocolError("message must be a JSON object")
    if doc.get("schema") != PROTOCOL_SCHEMA_VERSION:
        raise ProtocolError(f"unsupported schema {doc.get('schema')!r}")
    msg_type = doc.get("type")
    if msg_type not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg_type!r}")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object")
    if msg_type == "hand_input":
        for fieldname in ("x", "y", "z"):
            if not isinstance(payload.get(fieldname), (int, float)):
                raise ProtocolError(f"hand_input needs numeric {fieldname!r}")
    if msg_type == "control":
        action = payload.get("action")
        if action not in CONTROL_ACTIONS:
            raise ProtocolError(f"unknown control action {action!r}")
    return doc
