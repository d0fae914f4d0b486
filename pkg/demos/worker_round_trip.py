#!/usr/bin/env python3
"""Hand one decoded architecture to a real training worker and get a fitness.

Needs the vlga-worker package (in worker/) installed; it runs in smoke mode
here: 500 synthetic images, one epoch, CPU.  The client and worker share only
the wire protocol, so any process speaking it could sit on the other end.
"""

import random
import sys

from vlga.chromosome import random_chromosome
from vlga.evaluators import EvalRequest, EvaluatorError
from vlga.model_graph import decode, graph_to_dict
from vlga.search_space import SearchSpace
from vlga.worker_client import WorkerClient

WORKER_CMD = [sys.executable, "-m", "vlga_worker", "--smoke"]

chromosome = random_chromosome(SearchSpace(), 1, random.Random(3))
graph = decode(chromosome, (32, 32, 3), 10)
print(f"architecture: {chromosome.layer_count} conv layers,"
      f" {len(graph.nodes)} graph nodes")

try:
    with WorkerClient(WORKER_CMD) as client:
        shapes = client.dump_shapes(graph_to_dict(graph), "demo-shapes")
        print(f"worker agrees on {len(shapes)} node shapes,"
              f" e.g. block0/conv_a -> {shapes['block0/conv_a']}")
        result = client.evaluate(EvalRequest(
            request_id="demo", graph=graph_to_dict(graph), epochs=1))
except (EvaluatorError, OSError) as exc:
    sys.exit(f"could not run the worker ({exc});"
             " install it with: pip install -e worker/")

if result.error:
    sys.exit(f"worker returned an error: {result.error}")
print(f"validation accuracy {result.fitness:.4f} after 1 epoch"
      f" ({result.cost_units:.0f} epoch-unit), model saved as {result.model_ref}")
