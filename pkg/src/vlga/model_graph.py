"""Decoding chromosomes into explicit architecture graphs.

The graph is the phenotype: an ordered node list with directed edges, every
node annotated with its output tensor shape.  Shapes are (H, W, C) along the
convolutional trunk and flat (features,) after flattening.  Convolutions use
same padding and stride 1, pooling is fixed at 2x2 with stride 2, so only
pooling changes spatial size.

Node ids are stable across phases ("block0/conv_a", "block3/pool", ...),
which is what makes weight transfer between a parent and its extension a
plain id-to-id map.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from functools import cached_property

from .chromosome import Chromosome, ConvLayerGenes


class InvalidArchitecture(ValueError):
    """The chromosome decodes to a network with an impossible shape."""


@dataclass(frozen=True)
class GraphNode:
    node_id: str
    op: str
    attrs: dict
    output_shape: tuple[int, ...]


@dataclass(frozen=True)
class ArchitectureGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[tuple[str, str], ...]
    transfer_map: dict = field(default_factory=dict)

    @cached_property
    def _by_id(self) -> dict[str, GraphNode]:
        return {n.node_id: n for n in self.nodes}

    def node(self, node_id: str) -> GraphNode:
        return self._by_id[node_id]

    def inputs_of(self, node_id: str) -> list[str]:
        return [src for src, dst in self.edges if dst == node_id]

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return self.nodes[0].output_shape  # type: ignore[return-value]

    @property
    def output_node(self) -> GraphNode:
        return self.nodes[-1]


class _Builder:
    def __init__(self, input_shape: tuple[int, int, int]):
        h, w, c = input_shape
        self.nodes: list[GraphNode] = []
        self.edges: list[tuple[str, str]] = []
        self._add_node("input", "input", {}, (h, w, c))
        self.head = "input"

    def _add_node(self, node_id, op, attrs, shape) -> None:
        self.nodes.append(GraphNode(node_id, op, attrs, tuple(shape)))

    def append(self, node_id, op, attrs, shape) -> None:
        """Add a node fed by the current head and advance the head."""
        self._add_node(node_id, op, attrs, shape)
        self.edges.append((self.head, node_id))
        self.head = node_id

    def branch(self, src, node_id, op, attrs, shape) -> None:
        """Add a side node fed by ``src`` without moving the head."""
        self._add_node(node_id, op, attrs, shape)
        self.edges.append((src, node_id))

    def shape_of(self, node_id) -> tuple[int, ...]:
        for n in self.nodes:
            if n.node_id == node_id:
                return n.output_shape
        raise KeyError(node_id)


def _conv_chain(b: _Builder, prefix: str, layer: ConvLayerGenes, activation: str) -> None:
    h, w, _ = b.shape_of(b.head)
    b.append(f"{prefix}", "conv",
             {"out_channels": layer.out_channels, "filter_size": layer.filter_size,
              "stride": 1, "padding": "same"},
             (h, w, layer.out_channels))
    if layer.batch_norm:
        b.append(f"{prefix.rsplit('/', 1)[0]}/bn_{prefix[-1]}", "batch_norm", {},
                 (h, w, layer.out_channels))
    b.append(f"{prefix.rsplit('/', 1)[0]}/act_{prefix[-1]}", "activation",
             {"kind": activation}, (h, w, layer.out_channels))


def decode(
    chromosome: Chromosome,
    input_shape: tuple[int, int, int] = (32, 32, 3),
    num_classes: int = 10,
) -> ArchitectureGraph:
    """Build the layer graph a chromosome describes.

    Each block runs conv layer a (with optional batch norm, then the
    model-wide activation), pooling after layer a when present, then conv
    layer b the same way when present.  A skip connection is a 1x1 conv from
    the block input, strided to match any pooling, merged by elementwise Add
    after the block's last activation.  The trunk ends in Flatten plus a
    dense output layer.

    Raises InvalidArchitecture when pooling would shrink a spatial dimension
    below 1.
    """
    h, w, _ = input_shape
    if h < 1 or w < 1:
        raise InvalidArchitecture(f"input spatial size {h}x{w} is empty")
    if num_classes < 1:
        raise ValueError(f"num_classes must be positive, got {num_classes}")

    activation = chromosome.phase0.activation
    b = _Builder(input_shape)

    blocks: list[tuple[bool, ConvLayerGenes, ConvLayerGenes, bool, str, bool]] = [
        (True, chromosome.phase0.layer_a, chromosome.phase0.layer_b,
         chromosome.phase0.pooling_present, chromosome.phase0.pooling_type,
         chromosome.phase0.skip_connection),
    ]
    blocks.extend(
        (ext.include_layer_b, ext.layer_a, ext.layer_b,
         ext.pooling_present, ext.pooling_type, ext.skip_connection)
        for ext in chromosome.extensions
    )

    for i, (has_b, layer_a, layer_b, pooled, pool_kind, skip) in enumerate(blocks):
        block = f"block{i}"
        block_input = b.head
        in_h, in_w, _ = b.shape_of(block_input)

        _conv_chain(b, f"{block}/conv_a", layer_a, activation)

        if pooled:
            out_h, out_w = in_h // 2, in_w // 2
            if out_h < 1 or out_w < 1:
                raise InvalidArchitecture(
                    f"pooling in block {i} reduces spatial size "
                    f"{in_h}x{in_w} below 1"
                )
            b.append(f"{block}/pool", "pool",
                     {"kind": pool_kind, "size": 2, "stride": 2},
                     (out_h, out_w, layer_a.out_channels))

        if has_b:
            _conv_chain(b, f"{block}/conv_b", layer_b, activation)

        if skip:
            out_shape = b.shape_of(b.head)
            b.branch(block_input, f"{block}/skip_conv", "skip_conv",
                     {"out_channels": out_shape[2], "filter_size": 1,
                      "stride": 2 if pooled else 1},
                     out_shape)
            main_head = b.head
            b._add_node(f"{block}/add", "add", {}, out_shape)
            b.edges.append((main_head, f"{block}/add"))
            b.edges.append((f"{block}/skip_conv", f"{block}/add"))
            b.head = f"{block}/add"

    h, w, c = b.shape_of(b.head)
    b.append("flatten", "flatten", {}, (h * w * c,))
    b.append("dense", "dense", {"units": num_classes}, (num_classes,))

    graph = ArchitectureGraph(nodes=tuple(b.nodes), edges=tuple(b.edges))
    validate(graph)
    return graph


def validate(graph: ArchitectureGraph) -> None:
    """Check the structural invariants every decoded graph must satisfy."""
    ids = [n.node_id for n in graph.nodes]
    if len(set(ids)) != len(ids):
        raise InvalidArchitecture("duplicate node ids")
    id_set = set(ids)
    for src, dst in graph.edges:
        if src not in id_set or dst not in id_set:
            raise InvalidArchitecture(f"edge ({src}, {dst}) references unknown node")

    incoming: dict[str, int] = {i: 0 for i in ids}
    outgoing: dict[str, int] = {i: 0 for i in ids}
    for src, dst in graph.edges:
        incoming[dst] += 1
        outgoing[src] += 1
    sources = [i for i in ids if incoming[i] == 0]
    sinks = [i for i in ids if outgoing[i] == 0]
    if len(sources) != 1 or len(sinks) != 1:
        raise InvalidArchitecture(
            f"expected single source and sink, got {sources} / {sinks}"
        )

    # Kahn topological order doubles as the cycle check
    remaining = dict(incoming)
    ready = [i for i in ids if remaining[i] == 0]
    seen = 0
    while ready:
        node = ready.pop()
        seen += 1
        for src, dst in graph.edges:
            if src == node:
                remaining[dst] -= 1
                if remaining[dst] == 0:
                    ready.append(dst)
    if seen != len(ids):
        raise InvalidArchitecture("graph contains a cycle")

    for node in graph.nodes:
        if len(node.output_shape) == 3:
            h, w, _ = node.output_shape
            if h < 1 or w < 1:
                raise InvalidArchitecture(
                    f"node {node.node_id} has empty spatial shape {node.output_shape}"
                )
        if node.op == "add":
            in_shapes = {graph.node(i).output_shape for i in graph.inputs_of(node.node_id)}
            if len(graph.inputs_of(node.node_id)) != 2 or len(in_shapes) != 1:
                raise InvalidArchitecture(
                    f"add node {node.node_id} needs two shape-equal inputs"
                )


def build_transfer_map(child: ArchitectureGraph, parent: ArchitectureGraph) -> dict[str, str]:
    """Map the child's prefix nodes onto the parent's nodes, id to id.

    Every block node of the parent must reappear in the child with identical
    op, attributes, and shape; the new extension block and the output head
    stay unmapped so they get fresh weights.
    """
    mapping: dict[str, str] = {}
    for node in parent.nodes:
        if not node.node_id.startswith("block"):
            continue
        try:
            counterpart = child.node(node.node_id)
        except KeyError:
            raise ValueError(f"child lacks prefix node {node.node_id}") from None
        if (counterpart.op, counterpart.attrs, counterpart.output_shape) != (
            node.op, node.attrs, node.output_shape
        ):
            raise ValueError(f"prefix node {node.node_id} differs from parent")
        mapping[node.node_id] = node.node_id
    return mapping


def with_transfer_map(graph: ArchitectureGraph, mapping: dict[str, str]) -> ArchitectureGraph:
    return replace(graph, transfer_map=dict(mapping))


# --- canonical serialized form (the payload sent to evaluators) ---------------

def graph_to_dict(graph: ArchitectureGraph) -> dict:
    return {
        "nodes": [
            {
                "id": n.node_id,
                "op": n.op,
                "attrs": n.attrs,
                "output_shape": list(n.output_shape),
            }
            for n in graph.nodes
        ],
        "edges": [[src, dst] for src, dst in graph.edges],
        "transfer_map": {k: graph.transfer_map[k] for k in sorted(graph.transfer_map)},
    }


def graph_from_dict(data: dict) -> ArchitectureGraph:
    graph = ArchitectureGraph(
        nodes=tuple(
            GraphNode(
                node_id=n["id"],
                op=n["op"],
                attrs=dict(n["attrs"]),
                output_shape=tuple(n["output_shape"]),
            )
            for n in data["nodes"]
        ),
        edges=tuple((src, dst) for src, dst in data["edges"]),
        transfer_map=dict(data.get("transfer_map", {})),
    )
    validate(graph)
    return graph


def canonical_graph_json(graph: ArchitectureGraph) -> str:
    return json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":"))


def graph_hash(graph: ArchitectureGraph) -> str:
    return hashlib.sha256(canonical_graph_json(graph).encode("utf-8")).hexdigest()
