"""The worker's request loop: one process, one request in flight.

Reads newline-delimited JSON from stdin, answers on stdout.  Anything that
goes wrong with a particular request becomes an eval_result carrying an
error note (or a kind="error" line when there is no request to blame); the
process itself only exits on shutdown, stdin closing, or a version-mismatch
handshake.
"""

from __future__ import annotations

import itertools

import torch

from .datasets import cifar10_available, load_cifar10, synthetic_dataset
from .model_builder import GraphError, GraphModel
from .protocol import (
    PROTOCOL_VERSION,
    error_message,
    error_result,
    eval_result,
    hello_reply,
    parse_line,
    send,
    shapes_result,
)
from .store import ModelStore
from .trainer import train_and_evaluate

SMOKE_TRAIN, SMOKE_VAL = 500, 200
SYNTH_TRAIN, SYNTH_VAL = 5_000, 1_000


class TrainerWorker:
    def __init__(
        self,
        *,
        smoke: bool = False,
        data_dir: str | None = None,
        model_dir: str | None = None,
        seed: int = 0,
        batch_size: int = 64,
        learning_rate: float = 1e-3,
    ):
        self.smoke = smoke
        self.data_dir = data_dir
        self.seed = seed
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.store = ModelStore(model_dir)
        self.refs = itertools.count(1)
        self.greeted = False
        self.input_shape = (32, 32, 3)
        self.num_classes = 10
        self._data = None

    # --- dataset ---

    def _dataset(self):
        if self._data is None:
            if cifar10_available(self.data_dir):
                train_x, train_y, val_x, val_y = load_cifar10(self.data_dir)
                if self.smoke:
                    train_x, train_y = train_x[:SMOKE_TRAIN], train_y[:SMOKE_TRAIN]
                    val_x, val_y = val_x[:SMOKE_VAL], val_y[:SMOKE_VAL]
            else:
                n_train = SMOKE_TRAIN if self.smoke else SYNTH_TRAIN
                n_val = SMOKE_VAL if self.smoke else SYNTH_VAL
                train_x, train_y, val_x, val_y = synthetic_dataset(
                    n_train, n_val,
                    num_classes=self.num_classes, input_shape=self.input_shape,
                )
            self._data = (train_x, train_y), (val_x, val_y)
        return self._data

    # --- request handlers ---

    def handle_hello(self, msg: dict) -> tuple[dict, bool]:
        """Returns (reply, keep_running)."""
        self.input_shape = tuple(msg.get("input_shape", self.input_shape))
        self.num_classes = int(msg.get("num_classes", self.num_classes))
        self.greeted = True
        theirs = msg.get("protocol_version")
        # always answer with our version; on mismatch the peer aborts and so
        # do we, after giving it the evidence
        return hello_reply(), theirs == PROTOCOL_VERSION

    def handle_eval(self, msg: dict) -> dict:
        request_id = msg.get("request_id")
        if not isinstance(request_id, str) or not request_id:
            return error_message("eval_request without a request_id")
        if not self.greeted:
            return error_result(request_id, "eval_request before hello")
        graph = msg.get("graph")
        epochs = msg.get("epochs")
        if not isinstance(graph, dict):
            return error_result(request_id, "eval_request without a graph")
        if not isinstance(epochs, int) or epochs < 1:
            return error_result(request_id, f"bad epochs value {epochs!r}")

        try:
            torch.manual_seed(self.seed)
            model = GraphModel(graph, self.input_shape, self.num_classes)

            warm_ref = msg.get("warm_start_from")
            transfer_map = msg.get("transfer_map") or {}
            if warm_ref is not None:
                stored = self.store.load(warm_ref)
                if stored is None:
                    return error_result(
                        request_id, f"unknown model_ref {warm_ref!r}")
                for target, source in transfer_map.items():
                    if target not in model.modules_by_node:
                        continue  # input and add nodes have no module
                    if not model.modules_by_node[target].state_dict():
                        continue  # activations and pooling: nothing to move
                    if source not in stored:
                        return error_result(
                            request_id,
                            f"parent model has no weights for {source!r}")
                    model.load_node_state(target, stored[source])

            train, val = self._dataset()
            accuracy = train_and_evaluate(
                model, train, val,
                epochs=epochs, batch_size=self.batch_size,
                learning_rate=self.learning_rate,
            )
            ref = f"model-{next(self.refs):05d}"
            self.store.save(ref, model.node_states())
            return eval_result(request_id, accuracy, ref, float(epochs), None)
        except GraphError as exc:
            return error_result(request_id, f"graph rejected: {exc}")
        except (RuntimeError, MemoryError, ValueError, KeyError) as exc:
            return error_result(request_id, f"evaluation failed: {exc}")

    def handle_dump_shapes(self, msg: dict) -> dict:
        request_id = msg.get("request_id")
        if not isinstance(request_id, str) or not request_id:
            return error_message("dump_shapes_request without a request_id")
        graph = msg.get("graph")
        if not isinstance(graph, dict):
            return error_message("dump_shapes_request without a graph")
        try:
            torch.manual_seed(self.seed)
            model = GraphModel(graph, self.input_shape, self.num_classes)
            return shapes_result(request_id, model.node_shapes(self.input_shape))
        except GraphError as exc:
            return error_message(f"graph rejected: {exc}")
        except (RuntimeError, MemoryError, ValueError, KeyError) as exc:
            return error_message(f"shape dump failed: {exc}")

    # --- loop ---

    def run(self, in_stream, out_stream) -> int:
        for line in in_stream:
            if not line.strip():
                continue
            msg = parse_line(line)
            if msg is None:
                send(out_stream, error_message("unparseable line"))
                continue
            kind = msg.get("kind")
            if kind == "hello":
                reply, keep_running = self.handle_hello(msg)
                send(out_stream, reply)
                if not keep_running:
                    return 0
            elif kind == "eval_request":
                send(out_stream, self.handle_eval(msg))
            elif kind == "dump_shapes_request":
                send(out_stream, self.handle_dump_shapes(msg))
            elif kind == "shutdown":
                return 0
            else:
                send(out_stream, error_message(f"unknown kind {kind!r}"))
        return 0
