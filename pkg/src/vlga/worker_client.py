"""Client side of the external trainer protocol.

Workers are subprocesses exchanging newline-delimited JSON objects over
stdin/stdout.  Every message carries a "kind": hello, eval_request,
eval_result, dump_shapes_request, dump_shapes_result, shutdown, or error.
The client opens with hello and aborts on a protocol version mismatch.

Per-request failures (timeout, malformed reply, worker-reported error) come
back as EvalResults carrying an error note.  A dead worker process raises
EvaluatorUnavailable instead, so callers can checkpoint and stop.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading

from .evaluators import (
    PROTOCOL_VERSION,
    EvalRequest,
    EvalResult,
    EvaluatorUnavailable,
    ProtocolError,
)

_EOF = object()


def _error_result(req: EvalRequest, message: str) -> EvalResult:
    return EvalResult(
        request_id=req.request_id, fitness=0.0, model_ref=None,
        cost_units=0.0, error=message,
    )


class WorkerClient:
    """One worker subprocess with one request in flight at a time."""

    def __init__(
        self,
        cmd: list[str],
        *,
        dataset: str = "cifar10",
        input_shape: tuple[int, int, int] = (32, 32, 3),
        num_classes: int = 10,
        handshake_timeout: float = 60.0,
        eval_timeout: float = 3600.0,
    ):
        self.cmd = list(cmd)
        self.dataset = dataset
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes
        self.handshake_timeout = handshake_timeout
        self.eval_timeout = eval_timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._dead = False

    # --- lifecycle ---

    def start(self) -> None:
        self._proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        reader = threading.Thread(target=self._read_loop, daemon=True)
        reader.start()
        self._send({
            "kind": "hello",
            "protocol_version": PROTOCOL_VERSION,
            "dataset": self.dataset,
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
        })
        reply = self._recv(self.handshake_timeout)
        if reply is None or reply.get("kind") != "hello":
            self._terminate()
            raise ProtocolError(f"handshake failed, worker sent {reply!r}")
        if reply.get("protocol_version") != PROTOCOL_VERSION:
            self._terminate()
            raise ProtocolError(
                f"protocol version mismatch: ours {PROTOCOL_VERSION}, "
                f"worker {reply.get('protocol_version')!r}"
            )

    def _read_loop(self) -> None:
        assert self._proc is not None and self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    @property
    def alive(self) -> bool:
        return (
            not self._dead
            and self._proc is not None
            and self._proc.poll() is None
        )

    def _terminate(self) -> None:
        self._dead = True
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def shutdown(self) -> None:
        if self._proc is None:
            return
        if self._proc.poll() is None and not self._dead:
            try:
                self._send({"kind": "shutdown"})
                self._proc.wait(timeout=10.0)
            except (EvaluatorUnavailable, subprocess.TimeoutExpired):
                pass
        self._terminate()

    def __enter__(self) -> "WorkerClient":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

    # --- wire primitives ---

    def _send(self, message: dict) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._dead = True
            raise EvaluatorUnavailable(f"worker stdin closed: {exc}") from exc

    def _recv(self, timeout: float) -> dict | None:
        """Next parsed message, None on timeout; raises on EOF or bad JSON."""
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            return None
        if line is _EOF:
            self._dead = True
            raise EvaluatorUnavailable("worker closed its stdout")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable worker line {line!r}: {exc}") from exc
        if not isinstance(message, dict):
            raise ProtocolError(f"worker sent a non-object message: {message!r}")
        return message

    # --- requests ---

    def evaluate(self, req: EvalRequest, timeout: float | None = None) -> EvalResult:
        with self._lock:
            if not self.alive:
                raise EvaluatorUnavailable("worker process is not running")
            deadline = timeout if timeout is not None else self.eval_timeout
            self._send({"kind": "eval_request", **req.to_dict()})
            return self._await_result(req, deadline)

    def _await_result(self, req: EvalRequest, timeout: float) -> EvalResult:
        while True:
            try:
                message = self._recv(timeout)
            except EvaluatorUnavailable:
                return _error_result(req, "worker exited mid-request")
            except ProtocolError as exc:
                self._terminate()
                return _error_result(req, str(exc))
            if message is None:
                self._terminate()
                return _error_result(req, f"timeout after {timeout}s")
            kind = message.get("kind")
            if kind == "error":
                return _error_result(
                    req, f"worker error: {message.get('message', 'unspecified')}"
                )
            if kind != "eval_result":
                continue  # stray message from an earlier exchange
            if message.get("request_id") != req.request_id:
                continue
            try:
                return EvalResult.from_dict(message)
            except (KeyError, TypeError, ValueError) as exc:
                self._terminate()
                return _error_result(req, f"malformed eval_result: {exc}")

    def dump_shapes(self, graph: dict, request_id: str,
                    timeout: float = 120.0) -> dict[str, tuple[int, ...]]:
        """Ask the worker for the output shape of every node in its built model."""
        with self._lock:
            if not self.alive:
                raise EvaluatorUnavailable("worker process is not running")
            self._send({
                "kind": "dump_shapes_request",
                "request_id": request_id,
                "graph": graph,
            })
            while True:
                message = self._recv(timeout)
                if message is None:
                    self._terminate()
                    raise ProtocolError(f"dump_shapes timeout after {timeout}s")
                kind = message.get("kind")
                if kind == "error":
                    raise ProtocolError(
                        f"worker error: {message.get('message', 'unspecified')}"
                    )
                if kind != "dump_shapes_result":
                    continue
                if message.get("request_id") != request_id:
                    continue
                return {
                    node_id: tuple(shape)
                    for node_id, shape in message["shapes"].items()
                }


class WorkerPool:
    """Fixed set of workers; requests are dealt out one per free worker."""

    name = "external"

    def __init__(self, cmd: list[str], size: int = 1, **worker_kwargs):
        if size < 1:
            raise ValueError(f"pool size must be positive, got {size}")
        self.clients = [WorkerClient(cmd, **worker_kwargs) for _ in range(size)]
        self._free: queue.Queue = queue.Queue()

    def start(self) -> None:
        for client in self.clients:
            client.start()
            self._free.put(client)

    def evaluate(self, req: EvalRequest) -> EvalResult:
        client = self._free.get()
        try:
            return client.evaluate(req)
        finally:
            self._free.put(client)

    def evaluate_many(self, requests: list[EvalRequest]) -> list[EvalResult]:
        if not requests:
            return []
        results: list[EvalResult | None] = [None] * len(requests)
        errors: list[Exception] = []

        def run(index: int, req: EvalRequest) -> None:
            try:
                results[index] = self.evaluate(req)
            except Exception as exc:  # collected, re-raised on the caller
                errors.append(exc)
                results[index] = _error_result(req, f"dispatch failed: {exc}")

        threads = [
            threading.Thread(target=run, args=(i, req))
            for i, req in enumerate(requests)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for exc in errors:
            if isinstance(exc, EvaluatorUnavailable):
                raise exc
        return results  # type: ignore[return-value]

    def shutdown(self) -> None:
        for client in self.clients:
            client.shutdown()

    def __enter__(self) -> "WorkerPool":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()
