"""Wire format: newline-delimited JSON objects over stdin/stdout.

Every message is one line carrying a "kind" field.  The conversation opens
with a hello exchange that pins the protocol version; afterwards the peer
sends eval_request, dump_shapes_request, or shutdown, and we answer with
eval_result, dump_shapes_result, or a kind="error" note.  All numbers travel
as decimal text; floats keep full repr precision, comfortably more than the
six significant digits the contract asks for.
"""

from __future__ import annotations

import json

PROTOCOL_VERSION = 1

WORKER_NAME = "torch-trainer"


def send(stream, message: dict) -> None:
    stream.write(json.dumps(message) + "\n")
    stream.flush()


def parse_line(line: str) -> dict | None:
    """Parsed message object, or None for anything that is not one."""
    try:
        message = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(message, dict):
        return None
    return message


def hello_reply() -> dict:
    return {
        "kind": "hello",
        "protocol_version": PROTOCOL_VERSION,
        "worker": WORKER_NAME,
    }


def error_message(text: str) -> dict:
    return {"kind": "error", "message": text}


def eval_result(request_id: str, fitness: float | None, model_ref: str | None,
                cost_units: float, error: str | None) -> dict:
    return {
        "kind": "eval_result",
        "request_id": request_id,
        "fitness": float(fitness) if fitness is not None else 0.0,
        "model_ref": model_ref,
        "cost_units": float(cost_units),
        "error": error,
    }


def error_result(request_id: str, text: str) -> dict:
    return eval_result(request_id, 0.0, None, 0.0, text)


def shapes_result(request_id: str, shapes: dict[str, tuple[int, ...]]) -> dict:
    return {
        "kind": "dump_shapes_result",
        "request_id": request_id,
        "shapes": {node_id: list(shape) for node_id, shape in shapes.items()},
    }
