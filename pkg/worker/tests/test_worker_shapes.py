"""Shape agreement between the search side's decoder and the built models.

The search side annotates every graph node with the output shape it expects.
The worker builds a real torch module from the same serialized graph and
reports what actually comes out of each node.  These have to agree exactly,
across random draws from the search space, or warm starting and architecture
bookkeeping fall apart quietly.
"""

import random
import sys

import pytest
import torch

from vlga.chromosome import random_chromosome
from vlga.model_graph import InvalidArchitecture, decode, graph_to_dict
from vlga.search_space import SearchSpace
from vlga.worker_client import WorkerClient

from vlga_worker.model_builder import GraphError, GraphModel, topological_order

WORKER_CMD = [sys.executable, "-m", "vlga_worker", "--smoke"]


def sample_graphs(count: int, max_phase: int = 2, seed: int = 90):
    """Random valid decoded graphs, cycling through phases 0..max_phase."""
    space = SearchSpace()
    rng = random.Random(seed)
    graphs = []
    while len(graphs) < count:
        phase = len(graphs) % (max_phase + 1)
        try:
            graphs.append(decode(random_chromosome(space, phase, rng)))
        except InvalidArchitecture:
            continue
    return graphs


def declared_shapes(graph) -> dict[str, tuple]:
    return {n.node_id: tuple(n.output_shape) for n in graph.nodes}


def test_worker_reports_declared_shapes_on_random_graphs():
    graphs = sample_graphs(100)
    with WorkerClient(WORKER_CMD) as client:
        for i, graph in enumerate(graphs):
            reported = client.dump_shapes(graph_to_dict(graph), f"shape-{i}")
            assert reported == declared_shapes(graph), (
                f"graph {i}: worker shapes disagree with declared shapes")


def test_in_process_build_matches_declared_shapes():
    # same comparison without the subprocess, pinning the builder itself
    for graph in sample_graphs(20, seed=91):
        model = GraphModel(graph_to_dict(graph), (32, 32, 3), 10)
        assert model.node_shapes((32, 32, 3)) == declared_shapes(graph)


def test_forward_output_is_class_logits():
    graph = sample_graphs(1)[0]
    model = GraphModel(graph_to_dict(graph), (32, 32, 3), 10)
    with torch.no_grad():
        out = model(torch.zeros(4, 3, 32, 32))
    assert out.shape == (4, 10)


# --- builder rejections ---


def chain(*triples):
    """Linear graph from (id, op, attrs) triples."""
    nodes = [{"id": i, "op": op, "attrs": attrs,
              "output_shape": [32, 32, 3] if op == "input" else []}
             for i, op, attrs in triples]
    edges = [[triples[i][0], triples[i + 1][0]] for i in range(len(triples) - 1)]
    return {"nodes": nodes, "edges": edges}


def test_cycle_is_rejected():
    graph = chain(("input", "input", {}),
                  ("a", "activation", {"kind": "relu"}),
                  ("b", "activation", {"kind": "relu"}))
    graph["edges"].append(["b", "a"])
    with pytest.raises(GraphError, match="cycle"):
        topological_order(graph["nodes"], graph["edges"])


def test_duplicate_node_id_is_rejected():
    nodes = [{"id": "x", "op": "input", "attrs": {}},
             {"id": "x", "op": "flatten", "attrs": {}}]
    with pytest.raises(GraphError, match="duplicate"):
        topological_order(nodes, [])


def test_edge_to_missing_node_is_rejected():
    nodes = [{"id": "x", "op": "input", "attrs": {}}]
    with pytest.raises(GraphError, match="missing node"):
        topological_order(nodes, [["x", "ghost"]])


def test_unknown_op_is_rejected():
    graph = chain(("input", "input", {}), ("w", "warp", {}))
    with pytest.raises(GraphError):
        GraphModel(graph, (32, 32, 3), 10)


def test_input_shape_mismatch_is_rejected():
    graph = chain(("input", "input", {}),
                  ("flat", "flatten", {}),
                  ("out", "dense", {"units": 10}))
    graph["nodes"][0]["output_shape"] = [64, 64, 3]
    with pytest.raises(GraphError, match="input"):
        GraphModel(graph, (32, 32, 3), 10)


def test_dense_units_must_match_class_count():
    graph = chain(("input", "input", {}),
                  ("flat", "flatten", {}),
                  ("out", "dense", {"units": 7}))
    with pytest.raises(GraphError):
        GraphModel(graph, (32, 32, 3), 10)


def test_pooling_below_one_pixel_is_rejected():
    triples = [("input", "input", {})]
    # 32 -> 16 -> 8 -> 4 -> 2 -> 1 -> error on the sixth pool
    for i in range(6):
        triples.append((f"pool{i}", "pool",
                        {"kind": "max", "size": 2, "stride": 2}))
    triples += [("flat", "flatten", {}), ("out", "dense", {"units": 10})]
    with pytest.raises(GraphError, match="vanishes"):
        GraphModel(chain(*triples), (32, 32, 3), 10)


def test_add_needs_two_equal_shaped_inputs():
    graph = chain(("input", "input", {}),
                  ("a", "activation", {"kind": "relu"}),
                  ("sum", "add", {}),
                  ("flat", "flatten", {}),
                  ("out", "dense", {"units": 10}))
    with pytest.raises(GraphError):
        GraphModel(graph, (32, 32, 3), 10)
