"""
Pydantic models for integration process graphs.

A PatternGraph is an immutable value: nodes keyed by opaque id, edges as
(source, target, condition) triples. Every rewrite returns a new graph.
"""

import hashlib
import json
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from eipopt.exceptions import NodeNotFoundError


class PatternKind(str, Enum):
    """Integration pattern vocabulary."""
    START_EVENT = "StartEvent"
    END_EVENT = "EndEvent"
    EXTERNAL_ENDPOINT = "ExternalEndpoint"
    CONTENT_ENRICHER = "ContentEnricher"
    CONTENT_BASED_ROUTER = "ContentBasedRouter"
    MESSAGE_FILTER = "MessageFilter"
    CONTENT_FILTER = "ContentFilter"
    MESSAGE_TRANSLATOR = "MessageTranslator"
    MESSAGE_ENCODER = "MessageEncoder"
    MESSAGE_SIGNER = "MessageSigner"
    IDEMPOTENT_RECEIVER = "IdempotentReceiver"
    EXTERNAL_CALL = "ExternalCall"
    SPLITTER = "Splitter"
    AGGREGATOR = "Aggregator"
    MULTICAST = "Multicast"
    BALANCING_FORK = "BalancingFork"
    JOIN_ROUTER = "JoinRouter"
    CLAIM_CHECK = "ClaimCheck"
    THROTTLER = "Throttler"
    CIRCUIT_BREAKER_CALL = "CircuitBreakerCall"
    CUSTOM = "Custom"


EVENT_KINDS = frozenset({PatternKind.START_EVENT, PatternKind.END_EVENT})
NON_PATTERN_KINDS = EVENT_KINDS | {PatternKind.EXTERNAL_ENDPOINT}
FORK_KINDS = frozenset({PatternKind.MULTICAST, PatternKind.BALANCING_FORK, PatternKind.CONTENT_BASED_ROUTER})
JOIN_KINDS = frozenset({PatternKind.JOIN_ROUTER, PatternKind.AGGREGATOR})
CALL_KINDS = frozenset({PatternKind.EXTERNAL_CALL, PatternKind.CIRCUIT_BREAKER_CALL})
FILTER_KINDS = frozenset({PatternKind.CONTENT_FILTER, PatternKind.MESSAGE_FILTER})


class NodeProperties(BaseModel):
    """Behavioral flags and free-form configuration of a node."""
    model_config = ConfigDict(frozen=True)

    side_effect_free: bool = Field(True, description="Node has no externally visible effect")
    read_only: bool = Field(False, description="Node never modifies the message")
    message_access: bool = Field(True, description="Node reads or writes the payload")
    configuration: Dict[str, str] = Field(default_factory=dict, description="Pattern configuration (cf)")

    @model_validator(mode="after")
    def _read_only_is_pure(self) -> "NodeProperties":
        if self.read_only and not self.side_effect_free:
            raise ValueError("read_only implies side_effect_free")
        return self


class Contract(BaseModel):
    """Required (in) and produced (out) message element names."""
    model_config = ConfigDict(frozen=True)

    in_elements: FrozenSet[str] = Field(default_factory=frozenset)
    out_elements: FrozenSet[str] = Field(default_factory=frozenset)

    @field_validator("in_elements", "out_elements")
    @classmethod
    def _non_empty_names(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        if any(not name for name in value):
            raise ValueError("element names must be non-empty strings")
        return value

    @property
    def declared(self) -> bool:
        return bool(self.in_elements or self.out_elements)


class FailureStats(BaseModel):
    """Delivery-attempt statistics of an endpoint call."""
    model_config = ConfigDict(frozen=True)

    consecutive_failures: int = Field(0, ge=0)
    failure_rate: float = Field(0.0, ge=0.0, le=1.0)


class CostAnnotation(BaseModel):
    """Measured runtime characteristics; None means unmeasured."""
    model_config = ConfigDict(frozen=True)

    latency_ms: float = Field(0.0, ge=0.0)
    throughput_msg_per_s: Optional[float] = Field(None, gt=0.0)
    segment_count_in: Optional[int] = Field(None, gt=0)
    segment_count_out: Optional[int] = Field(None, gt=0)
    failure_stats: Optional[FailureStats] = None


class PatternNode(BaseModel):
    """A node of the process graph. kind None marks a node unlabelled mid-rewrite."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    kind: Optional[PatternKind] = None
    custom_name: Optional[str] = Field(None, description="Name of a Custom pattern")
    properties: NodeProperties = Field(default_factory=NodeProperties)
    contract: Contract = Field(default_factory=Contract)
    cost: CostAnnotation = Field(default_factory=CostAnnotation)

    @property
    def label(self) -> str:
        if self.kind is None:
            return "?"
        if self.kind == PatternKind.CUSTOM:
            return f"Custom:{self.custom_name or ''}"
        return self.kind.value

    @property
    def is_pattern(self) -> bool:
        return self.kind is not None and self.kind not in NON_PATTERN_KINDS

    @property
    def config(self) -> Dict[str, str]:
        return self.properties.configuration

    @property
    def throughput(self) -> Optional[float]:
        return self.cost.throughput_msg_per_s

    def config_list(self, key: str) -> List[Any]:
        """Read a configuration value stored as a JSON list."""
        raw = self.config.get(key)
        if not raw:
            return []
        return list(json.loads(raw))

    def with_config(self, **updates: Optional[str]) -> "PatternNode":
        """Return a copy with configuration keys set (None removes a key)."""
        configuration = dict(self.config)
        for key, value in updates.items():
            if value is None:
                configuration.pop(key, None)
            else:
                configuration[key] = value
        properties = self.properties.model_copy(update={"configuration": configuration})
        return self.model_copy(update={"properties": properties})

    def with_contract(
        self,
        in_elements: Optional[Iterable[str]] = None,
        out_elements: Optional[Iterable[str]] = None,
    ) -> "PatternNode":
        contract = Contract(
            in_elements=frozenset(self.contract.in_elements if in_elements is None else in_elements),
            out_elements=frozenset(self.contract.out_elements if out_elements is None else out_elements),
        )
        return self.model_copy(update={"contract": contract})

    def with_cost(self, **updates) -> "PatternNode":
        return self.model_copy(update={"cost": self.cost.model_copy(update=updates)})

    def unlabelled(self) -> "PatternNode":
        return self.model_copy(update={"kind": None, "custom_name": None})


class Edge(BaseModel):
    """Directed edge; condition is set on conditional router outputs."""
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    condition: Optional[str] = None

    @property
    def key(self) -> Tuple[str, str, Optional[str]]:
        return (self.source, self.target, self.condition)


class PatternGraph(BaseModel):
    """
    Immutable integration process graph.

    Adjacency indexes are built once on construction. Dangling edges and
    self-loops are representable so that validate() can report them.
    """
    model_config = ConfigDict(frozen=True)

    nodes: Dict[str, PatternNode] = Field(default_factory=dict)
    edges: Tuple[Edge, ...] = ()

    _succ: Dict[str, List[Edge]] = PrivateAttr(default_factory=dict)
    _pred: Dict[str, List[Edge]] = PrivateAttr(default_factory=dict)
    _revision: Optional[str] = PrivateAttr(default=None)
    _memo: Dict[str, Any] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        succ: Dict[str, List[Edge]] = {node_id: [] for node_id in self.nodes}
        pred: Dict[str, List[Edge]] = {node_id: [] for node_id in self.nodes}
        for edge in self.edges:
            succ.setdefault(edge.source, []).append(edge)
            pred.setdefault(edge.target, []).append(edge)
        self._succ = succ
        self._pred = pred

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def build(cls, nodes: Iterable[PatternNode], edges: Iterable[Edge] = ()) -> "PatternGraph":
        return cls(nodes={node.id: node for node in nodes}, edges=tuple(edges))

    def with_node(self, node: PatternNode) -> "PatternGraph":
        """Replace (or add) a node, keeping the edge set."""
        nodes = dict(self.nodes)
        nodes[node.id] = node
        return PatternGraph(nodes=nodes, edges=self.edges)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: str) -> PatternNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(node_id) from None

    def out_edges(self, node_id: str) -> List[Edge]:
        return self._succ.get(node_id, [])

    def in_edges(self, node_id: str) -> List[Edge]:
        return self._pred.get(node_id, [])

    def successors(self, node_id: str) -> List[str]:
        return _unique(edge.target for edge in self.out_edges(node_id))

    def predecessors(self, node_id: str) -> List[str]:
        return _unique(edge.source for edge in self.in_edges(node_id))

    def in_degree(self, node_id: str) -> int:
        return len(self.in_edges(node_id))

    def out_degree(self, node_id: str) -> int:
        return len(self.out_edges(node_id))

    def edges_between(self, source: str, target: str) -> List[Edge]:
        return [edge for edge in self.out_edges(source) if edge.target == target]

    def has_edge(self, source: str, target: str) -> bool:
        return bool(self.edges_between(source, target))

    def nodes_of_kind(self, *kinds: PatternKind) -> List[PatternNode]:
        return [node for node in self.nodes.values() if node.kind in kinds]

    def iter_nodes(self) -> Iterator[PatternNode]:
        return iter(self.nodes.values())

    @property
    def revision(self) -> str:
        """Content hash identifying this exact graph value."""
        if self._revision is None:
            payload = {
                "nodes": [node.model_dump(mode="json") for node in self.nodes.values()],
                "edges": sorted(
                    [edge.source, edge.target, edge.condition or ""] for edge in self.edges
                ),
            }
            canonical = json.dumps(payload, sort_keys=True, default=sorted)
            self._revision = hashlib.sha1(canonical.encode("utf-8")).hexdigest()
        return self._revision

    def memo(self, key: str, compute: Callable[["PatternGraph"], Any]) -> Any:
        """Compute a derived value once per graph value."""
        if key not in self._memo:
            self._memo[key] = compute(self)
        return self._memo[key]

    def to_networkx(self) -> nx.DiGraph:
        """
        Directed view for graph algorithms (shared; do not mutate).

        Parallel edges with different conditions collapse into one edge whose
        "conditions" attribute holds every condition. Dangling edges are skipped.
        """
        return self.memo("networkx", PatternGraph._build_view)

    def _build_view(self) -> nx.DiGraph:
        view = nx.DiGraph()
        for node in self.nodes.values():
            view.add_node(node.id, node=node)
        for edge in self.edges:
            if edge.source not in self.nodes or edge.target not in self.nodes:
                continue
            if view.has_edge(edge.source, edge.target):
                view[edge.source][edge.target]["conditions"] = (
                    view[edge.source][edge.target]["conditions"] | {edge.condition}
                )
            else:
                view.add_edge(edge.source, edge.target, conditions=frozenset({edge.condition}))
        return view

    def subgraph(self, node_ids: Iterable[str]) -> "PatternGraph":
        """Induced subgraph over node_ids, in host order."""
        keep = set(node_ids)
        return PatternGraph(
            nodes={node_id: node for node_id, node in self.nodes.items() if node_id in keep},
            edges=tuple(e for e in self.edges if e.source in keep and e.target in keep),
        )


def _unique(values: Iterable[str]) -> List[str]:
    seen: Dict[str, None] = {}
    for value in values:
        seen.setdefault(value, None)
    return list(seen)
