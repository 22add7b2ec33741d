"""
Process graph utilities: validation, metrics, isomorphism, reachability,
process-JSON codec and DOT export.
"""

from eipopt.pgraph.validation import validate
from eipopt.pgraph.metrics import model_complexity
from eipopt.pgraph.isomorphism import subgraph_isomorphic
from eipopt.pgraph.reachability import reachable_set, reverse_reachable_set
from eipopt.pgraph.codec import serialize, deserialize, load_graph
from eipopt.pgraph.dot import export_dot

__all__ = [
    "validate",
    "model_complexity",
    "subgraph_isomorphic",
    "reachable_set",
    "reverse_reachable_set",
    "serialize",
    "deserialize",
    "load_graph",
    "export_dot",
]
