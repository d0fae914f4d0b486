"""Wire-protocol client against a scripted echo worker subprocess."""

import random
import sys
from pathlib import Path

import pytest

from vlga.chromosome import random_chromosome
from vlga.evaluators import (
    EvalRequest,
    EvaluatorUnavailable,
    ProtocolError,
)
from vlga.model_graph import decode, graph_to_dict
from vlga.search_space import SearchSpace

from vlga.worker_client import WorkerClient, WorkerPool

ECHO = str(Path(__file__).parent / "helpers" / "echo_worker.py")


def worker_cmd(*flags):
    return [sys.executable, ECHO, *flags]


def sample_request(request_id="r1", seed=0):
    rng = random.Random(seed)
    c = random_chromosome(SearchSpace(), 0, rng)
    graph = graph_to_dict(decode(c, (32, 32, 3), 10))
    return EvalRequest(request_id=request_id, graph=graph, epochs=5)


def test_handshake_and_loopback_eval():
    with WorkerClient(worker_cmd()) as client:
        result = client.evaluate(sample_request())
        assert result.fitness == 0.5
        assert result.error is None
        assert result.model_ref == "echo-r1"
        assert result.cost_units == 5.0


def test_version_mismatch_aborts():
    client = WorkerClient(worker_cmd("--version", "999"))
    with pytest.raises(ProtocolError):
        client.start()
    assert not client.alive


def test_worker_death_mid_request_surfaces_as_error():
    with WorkerClient(worker_cmd("--die-mid-request")) as client:
        result = client.evaluate(sample_request())
        assert result.error is not None
        assert result.fitness == 0.0
        with pytest.raises(EvaluatorUnavailable):
            client.evaluate(sample_request("r2"))


def test_hanging_worker_times_out():
    with WorkerClient(worker_cmd("--hang")) as client:
        result = client.evaluate(sample_request(), timeout=0.5)
        assert result.error is not None
        assert "timeout" in result.error


def test_garbage_reply_surfaces_as_error():
    with WorkerClient(worker_cmd("--garbage")) as client:
        result = client.evaluate(sample_request())
        assert result.error is not None
        assert result.fitness == 0.0


def test_worker_reported_error_propagates():
    with WorkerClient(worker_cmd("--error-on-eval")) as client:
        result = client.evaluate(sample_request())
        assert result.error is not None
        assert "boom" in result.error
        # the worker stays usable after a per-request error
        result2 = client.evaluate(sample_request("r2"))
        assert result2.error is not None


def test_dead_worker_raises_unavailable():
    with WorkerClient(worker_cmd("--die-after-hello")) as client:
        import time
        time.sleep(0.3)
        with pytest.raises(EvaluatorUnavailable):
            client.evaluate(sample_request())


def test_dump_shapes_round_trip():
    req = sample_request()
    with WorkerClient(worker_cmd()) as client:
        shapes = client.dump_shapes(req.graph, "s1")
    expected = {n["id"]: tuple(n["output_shape"]) for n in req.graph["nodes"]}
    assert shapes == expected


def test_pool_preserves_request_order():
    requests = [sample_request(f"r{i}", seed=i) for i in range(6)]
    with WorkerPool(worker_cmd(), size=2) as pool:
        results = pool.evaluate_many(requests)
    assert [r.request_id for r in results] == [f"r{i}" for i in range(6)]
    assert all(r.fitness == 0.5 for r in results)


def test_clean_shutdown():
    client = WorkerClient(worker_cmd())
    client.start()
    client.shutdown()
    assert not client.alive
