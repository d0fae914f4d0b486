"""Serialized architecture graphs to PyTorch modules.

The graph arrives as plain data: nodes with an op, attributes, and edges.
Ops: input, conv (stride-1, "same" padding), batch_norm, activation, pool
(2x2 halving with floor), skip_conv (1x1, stride 2 when the block pooled),
add, flatten, dense.  A strided skip_conv crops odd spatial dims to even
first so its halving floors exactly like the pooling path it runs beside.

Shapes are tracked in (C, H, W) while building; `node_shapes` reports what
the built model actually produces, in the channels-last convention the graph
uses: (H, W, C) for spatial tensors, (features,) after flattening.
"""

from __future__ import annotations

import torch
from torch import nn

ACTIVATIONS = {
    "relu": nn.ReLU,
    "tanh": nn.Tanh,
    "elu": nn.ELU,
    "selu": nn.SELU,
}

PARAMETRIC_OPS = ("conv", "skip_conv", "batch_norm", "dense")


class GraphError(ValueError):
    """The graph cannot be built as described."""


def topological_order(nodes: list[dict], edges: list) -> list[dict]:
    by_id = {}
    for node in nodes:
        if node["id"] in by_id:
            raise GraphError(f"duplicate node id {node['id']!r}")
        by_id[node["id"]] = node
    incoming: dict[str, list[str]] = {node_id: [] for node_id in by_id}
    outgoing: dict[str, list[str]] = {node_id: [] for node_id in by_id}
    for src, dst in edges:
        if src not in by_id or dst not in by_id:
            raise GraphError(f"edge ({src!r}, {dst!r}) references a missing node")
        incoming[dst].append(src)
        outgoing[src].append(dst)

    ready = [n for n in by_id if not incoming[n]]
    pending = {n: len(incoming[n]) for n in by_id}
    order = []
    while ready:
        node_id = ready.pop(0)
        order.append(by_id[node_id])
        for nxt in outgoing[node_id]:
            pending[nxt] -= 1
            if pending[nxt] == 0:
                ready.append(nxt)
    if len(order) != len(by_id):
        raise GraphError("graph has a cycle")
    return order


class GraphModel(nn.Module):
    """Executable form of one architecture graph."""

    def __init__(self, graph: dict, input_shape: tuple[int, int, int],
                 num_classes: int):
        super().__init__()
        nodes = graph.get("nodes") or []
        edges = [tuple(e) for e in graph.get("edges") or []]
        self.order = topological_order(nodes, edges)
        self.inputs_of = {n["id"]: [] for n in self.order}
        for src, dst in edges:
            self.inputs_of[dst].append(src)
        self.modules_by_node = nn.ModuleDict()
        self._build(input_shape, num_classes)

    # --- construction ---

    def _build(self, input_shape, num_classes) -> None:
        height, width, channels = input_shape
        shapes: dict[str, tuple] = {}
        self.strided: set[str] = set()
        sink = None

        for node in self.order:
            node_id, op, attrs = node["id"], node["op"], node.get("attrs", {})
            feeds = self.inputs_of[node_id]
            if op != "input" and len(feeds) == 0:
                raise GraphError(f"{node_id}: no incoming edge")
            if op != "add" and len(feeds) > 1:
                raise GraphError(f"{node_id}: too many incoming edges")
            shape = shapes[feeds[0]] if feeds else None

            if op == "input":
                if tuple(node.get("output_shape", input_shape)) != tuple(input_shape):
                    raise GraphError(
                        f"graph wants input {node.get('output_shape')}, "
                        f"worker dataset is {list(input_shape)}")
                shapes[node_id] = (channels, height, width)
                continue

            if op in ("conv", "skip_conv"):
                c, h, w = shape
                k = int(attrs["filter_size"])
                stride = int(attrs.get("stride", 1))
                pad = k // 2 if attrs.get("padding") == "same" else 0
                out_c = int(attrs["out_channels"])
                self.modules_by_node[node_id] = nn.Conv2d(
                    c, out_c, k, stride=stride, padding=pad)
                if stride > 1:
                    # crop odd dims to even first: halving must floor
                    self.strided.add(node_id)
                    h, w = (h - h % 2) // stride, (w - w % 2) // stride
                shapes[node_id] = (out_c, h, w)
            elif op == "batch_norm":
                c, h, w = shape
                self.modules_by_node[node_id] = nn.BatchNorm2d(c)
                shapes[node_id] = shape
            elif op == "activation":
                kind = attrs.get("kind")
                if kind not in ACTIVATIONS:
                    raise GraphError(f"{node_id}: unknown activation {kind!r}")
                self.modules_by_node[node_id] = ACTIVATIONS[kind]()
                shapes[node_id] = shape
            elif op == "pool":
                c, h, w = shape
                size = int(attrs.get("size", 2))
                stride = int(attrs.get("stride", 2))
                if h // stride < 1 or w // stride < 1:
                    raise GraphError(f"{node_id}: spatial size vanishes")
                pool = {"max": nn.MaxPool2d, "average": nn.AvgPool2d}.get(
                    attrs.get("kind"))
                if pool is None:
                    raise GraphError(
                        f"{node_id}: unknown pooling {attrs.get('kind')!r}")
                self.modules_by_node[node_id] = pool(size, stride)
                shapes[node_id] = (c, h // stride, w // stride)
            elif op == "add":
                if len(feeds) != 2:
                    raise GraphError(f"{node_id}: add needs exactly 2 inputs")
                a, b = shapes[feeds[0]], shapes[feeds[1]]
                if a != b:
                    raise GraphError(f"{node_id}: add shape mismatch {a} vs {b}")
                shapes[node_id] = a
            elif op == "flatten":
                c, h, w = shape
                self.modules_by_node[node_id] = nn.Flatten()
                shapes[node_id] = (c * h * w,)
            elif op == "dense":
                if len(shape) != 1:
                    raise GraphError(f"{node_id}: dense input is not flat")
                units = int(attrs["units"])
                if units != num_classes:
                    raise GraphError(
                        f"{node_id}: {units} units for {num_classes} classes")
                self.modules_by_node[node_id] = nn.Linear(shape[0], units)
                shapes[node_id] = (units,)
                sink = node_id
            else:
                raise GraphError(f"{node_id}: unknown op {op!r}")

        if sink is None:
            raise GraphError("graph has no dense output node")
        self.sink = sink

    # --- execution ---

    def _run(self, x: torch.Tensor, record: dict | None = None) -> torch.Tensor:
        outputs: dict[str, torch.Tensor] = {}
        for node in self.order:
            node_id, op = node["id"], node["op"]
            feeds = self.inputs_of[node_id]
            if op == "input":
                out = x
            elif op == "add":
                out = outputs[feeds[0]] + outputs[feeds[1]]
            else:
                value = outputs[feeds[0]]
                if node_id in self.strided:
                    h, w = value.shape[2], value.shape[3]
                    value = value[:, :, : h - h % 2, : w - w % 2]
                out = self.modules_by_node[node_id](value)
            outputs[node_id] = out
            if record is not None:
                record[node_id] = _report_shape(out)
        return outputs[self.sink]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self._run(x)

    def node_shapes(self, input_shape: tuple[int, int, int]) -> dict[str, tuple]:
        """Measured output shape per node, channels-last, no batch axis."""
        h, w, c = input_shape
        was_training = self.training
        self.eval()
        with torch.no_grad():
            record: dict[str, tuple] = {}
            self._run(torch.zeros(1, c, h, w), record)
        self.train(was_training)
        return record

    def node_states(self) -> dict[str, dict]:
        """Per-node weight tensors for every parameter-bearing node."""
        return {
            node_id: {k: v.detach().clone() for k, v in module.state_dict().items()}
            for node_id, module in self.modules_by_node.items()
            if module.state_dict()
        }

    def load_node_state(self, node_id: str, state: dict) -> None:
        if node_id not in self.modules_by_node:
            raise GraphError(f"transfer target {node_id!r} is not in the model")
        try:
            self.modules_by_node[node_id].load_state_dict(state)
        except RuntimeError as exc:
            raise GraphError(f"transfer into {node_id!r} failed: {exc}") from exc


def _report_shape(tensor: torch.Tensor) -> tuple:
    if tensor.dim() == 4:
        _, c, h, w = tensor.shape
        return (h, w, c)
    return tuple(tensor.shape[1:])
