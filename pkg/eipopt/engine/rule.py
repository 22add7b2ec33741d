"""
Rewrite rule, match and right-hand-side types of the DPO engine.

A rule's left side L is a set of concrete node patterns, edge patterns and
cloud parameters (variable subgraphs bound at match time). The interface K
names the L nodes and clouds that survive. The right side R is produced per
match by the rule and references K, fresh nodes and cloud copies.
"""

import hashlib
import json
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from eipopt.exceptions import RuleConfigurationError
from eipopt.models.diagnostics import Diagnostic
from eipopt.models.optimizer import RuleParameters, Strategy
from eipopt.models.pattern_graph import Edge, PatternGraph, PatternKind, PatternNode


# ============================================================================
# Left Side
# ============================================================================

class NodePattern(BaseModel):
    """Concrete L node. kinds None accepts any labelled node."""
    model_config = ConfigDict(frozen=True)

    name: str
    kinds: Optional[FrozenSet[PatternKind]] = None
    guards: Tuple[str, ...] = Field((), description="Side-condition ids over the bound node")
    group: Optional[str] = Field(None, description="Interchangeable nodes bind in ascending id order")


class EdgePattern(BaseModel):
    """
    L edge between two concrete nodes.

    conditional None accepts any edge; conditions restricts the accepted
    condition strings, excluded rejects some.
    """
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    conditional: Optional[bool] = None
    conditions: Optional[FrozenSet[str]] = None
    excluded: FrozenSet[str] = frozenset()

    def accepts(self, edge: Edge) -> bool:
        if self.conditional is not None and (edge.condition is not None) != self.conditional:
            return False
        if self.conditions is not None and edge.condition not in self.conditions:
            return False
        return edge.condition not in self.excluded


class CloudParam(BaseModel):
    """
    Variable subgraph of L.

    The binder (registered in engine.clouds) enumerates candidate host
    subgraphs; it may also bind the L nodes listed in determines. Every edge
    between the bound subgraph and the rest of the host must touch one of the
    boundary attachments.
    """
    model_config = ConfigDict(frozen=True)

    name: str
    binder: str
    boundary: Tuple[str, ...] = ()
    determines: Tuple[str, ...] = ()
    side_conditions: Tuple[str, ...] = ()
    group: Optional[str] = None
    options: Dict[str, Any] = Field(default_factory=dict)


class LeftSide(BaseModel):
    """One concrete shape of a rule's L (rules with arity parameters yield several)."""
    model_config = ConfigDict(frozen=True)

    nodes: Tuple[NodePattern, ...] = ()
    edges: Tuple[EdgePattern, ...] = ()
    clouds: Tuple[CloudParam, ...] = ()
    interface: FrozenSet[str] = Field(default_factory=frozenset, description="K: preserved names")
    guards: Tuple[str, ...] = Field((), description="Side-condition ids over the whole match")
    order: Tuple[str, ...] = Field((), description="Search order; defaults to nodes then clouds")
    params: Dict[str, Any] = Field(default_factory=dict, description="Variant parameters")

    def search_order(self) -> Tuple[str, ...]:
        if self.order:
            return self.order
        return tuple(n.name for n in self.nodes) + tuple(c.name for c in self.clouds)

    def node_pattern(self, name: str) -> Optional[NodePattern]:
        for pattern in self.nodes:
            if pattern.name == name:
                return pattern
        return None

    def cloud_param(self, name: str) -> Optional[CloudParam]:
        for cloud in self.clouds:
            if cloud.name == name:
                return cloud
        return None

    def check_well_formed(self, rule_name: str) -> None:
        names = [n.name for n in self.nodes] + [c.name for c in self.clouds]
        if len(set(names)) != len(names):
            raise RuleConfigurationError(f"{rule_name}: duplicate L names")
        known = set(names)
        for edge in self.edges:
            if edge.source not in known or edge.target not in known:
                raise RuleConfigurationError(f"{rule_name}: edge references unknown L name")
        if not self.interface <= known:
            raise RuleConfigurationError(f"{rule_name}: interface is not a subset of L")
        order = self.search_order()
        determined = {name for c in self.clouds for name in c.determines}
        if set(order) | determined != known:
            raise RuleConfigurationError(f"{rule_name}: search order must cover L")


class CloudBinding:
    """Host nodes bound to a cloud, with their entry and exit nodes."""

    def __init__(self, nodes: Tuple[str, ...], entries: Tuple[str, ...], exits: Tuple[str, ...]):
        self.nodes = nodes
        self.entries = entries
        self.exits = exits

    def __repr__(self) -> str:
        return f"CloudBinding({list(self.nodes)})"


# ============================================================================
# Match
# ============================================================================

class Match:
    """
    An occurrence of a rule's L in a host graph.

    Holds the host value it was found in; apply() refuses it against any
    other revision.
    """

    def __init__(
        self,
        rule: "RewriteRule",
        left: LeftSide,
        host: PatternGraph,
        node_map: Dict[str, str],
        bindings: Dict[str, CloudBinding],
        covered_edges: FrozenSet[Tuple[str, str, Optional[str]]],
    ):
        self.rule = rule
        self.left = left
        self.host = host
        self.node_map = dict(node_map)
        self.bindings = dict(bindings)
        self.covered_edges = covered_edges
        self.revision = host.revision
        self.fingerprint = compute_fingerprint(rule.name, left.params, node_map, bindings)

    @property
    def params(self) -> Dict[str, Any]:
        return self.left.params

    def node(self, name: str) -> PatternNode:
        return self.host.node(self.node_map[name])

    def cloud(self, name: str) -> List[PatternNode]:
        return [self.host.node(node_id) for node_id in self.bindings[name].nodes]

    def cloud_ids(self, name: str) -> Tuple[str, ...]:
        return self.bindings[name].nodes

    def conditions(self, source: str, target: str) -> List[Optional[str]]:
        """Conditions of host edges between two bound L nodes."""
        source_id = self.node_map[source]
        target_id = self.node_map[target]
        return [edge.condition for edge in self.host.edges_between(source_id, target_id)]

    def condition(self, source: str, target: str) -> Optional[str]:
        found = self.conditions(source, target)
        return found[0] if found else None

    def edge_condition(self, source_id: str, target_id: str) -> Optional[str]:
        """Condition of the host edge between two host ids."""
        for edge in self.host.edges_between(source_id, target_id):
            return edge.condition
        return None

    @property
    def image(self) -> List[str]:
        ids = list(self.node_map.values())
        for binding in self.bindings.values():
            ids.extend(binding.nodes)
        return ids

    @property
    def deleted_nodes(self) -> List[str]:
        keep = self.left.interface
        deleted = [host_id for name, host_id in self.node_map.items() if name not in keep]
        for name, binding in self.bindings.items():
            if name not in keep:
                deleted.extend(binding.nodes)
        return deleted

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule": self.rule.name,
            "fingerprint": self.fingerprint,
            "nodes": dict(self.node_map),
            "clouds": {name: list(b.nodes) for name, b in self.bindings.items()},
            "params": dict(self.params),
        }

    def __repr__(self) -> str:
        return f"Match({self.rule.name}, {self.fingerprint[:10]})"


def compute_fingerprint(
    rule_name: str,
    params: Dict[str, Any],
    node_map: Dict[str, str],
    bindings: Dict[str, CloudBinding],
) -> str:
    payload = {
        "rule": rule_name,
        "params": {key: str(value) for key, value in sorted(params.items())},
        "nodes": sorted(node_map.items()),
        "clouds": sorted((name, list(b.nodes)) for name, b in bindings.items()),
    }
    return hashlib.sha1(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


# ============================================================================
# Right Side
# ============================================================================

class Ref:
    """Endpoint reference of an R edge."""

    NODE = "node"
    ENTRY = "entry"
    EXIT = "exit"
    HOST = "host"

    def __init__(self, kind: str, name: str, copy: Optional[str] = None):
        self.kind = kind
        self.name = name
        self.copy = copy

    @classmethod
    def node(cls, name: str) -> "Ref":
        """K node (by L name) or fresh node (by role)."""
        return cls(cls.NODE, name)

    @classmethod
    def entry(cls, cloud: str, copy: Optional[str] = None) -> "Ref":
        return cls(cls.ENTRY, cloud, copy)

    @classmethod
    def exit(cls, cloud: str, copy: Optional[str] = None) -> "Ref":
        return cls(cls.EXIT, cloud, copy)

    @classmethod
    def host(cls, node_id: str) -> "Ref":
        """A surviving member of a kept cloud, by host id."""
        return cls(cls.HOST, node_id)

    def __repr__(self) -> str:
        suffix = f"@{self.copy}" if self.copy else ""
        return f"Ref({self.kind}:{self.name}{suffix})"


NodeTransform = Callable[[PatternNode], PatternNode]


class CloudUse:
    """How R uses a kept cloud: transformed in place, rewired, and/or copied."""

    def __init__(
        self,
        transform: Optional[NodeTransform] = None,
        keep_internal_edges: bool = True,
        copies: Optional[Dict[str, Optional[NodeTransform]]] = None,
    ):
        self.transform = transform
        self.keep_internal_edges = keep_internal_edges
        self.copies = dict(copies or {})


class RightSide:
    """
    Replacement produced for one match.

    relabel maps K node names to their new node value (the id is kept);
    fresh maps role names to node templates whose ids the engine assigns.
    """

    def __init__(self):
        self.relabel: Dict[str, PatternNode] = {}
        self.fresh: Dict[str, PatternNode] = {}
        self.clouds: Dict[str, CloudUse] = {}
        self.edges: List[Tuple[Ref, Ref, Optional[str]]] = []

    def add_fresh(self, role: str, kind: PatternKind, **fields) -> Ref:
        self.fresh[role] = PatternNode(id=role, kind=kind, **fields)
        return Ref.node(role)

    def connect(self, source: Ref, target: Ref, condition: Optional[str] = None) -> None:
        self.edges.append((source, target, condition))

    def chain(self, *refs: Ref) -> None:
        for source, target in zip(refs, refs[1:]):
            self.connect(source, target)


# ============================================================================
# Rule
# ============================================================================

class RewriteRule(ABC):
    """
    Abstract base class for rewrite rules.

    Subclasses declare their metadata as class attributes, produce one or
    more left sides and build the right side for each match.
    """

    RULE_NAME: str = "base"
    STRATEGY_TAG: Strategy = Strategy.OS1
    DESCRIPTION: str = ""
    REQUIRES_COST_DATA: bool = False
    ENABLED_BY_DEFAULT: bool = True
    EFFECT_ESTIMATOR: Optional[str] = None

    def __init__(self, parameters: Optional[Dict[str, Any]] = None):
        self.parameters = {**self.get_default_parameters(), **(parameters or {})}
        self.validate_parameters()

    @property
    def name(self) -> str:
        return self.RULE_NAME

    @property
    def strategy(self) -> Strategy:
        return self.STRATEGY_TAG

    @property
    def effect_estimator(self) -> str:
        return self.EFFECT_ESTIMATOR or self.RULE_NAME

    def get_default_parameters(self) -> Dict[str, Any]:
        return {}

    def validate_parameters(self) -> None:
        """Raise RuleConfigurationError for invalid parameters."""

    @abstractmethod
    def left_sides(self, graph: PatternGraph, params: RuleParameters) -> Iterable[LeftSide]:
        """Yield the L shapes to search in graph."""

    @abstractmethod
    def right(self, match: Match) -> RightSide:
        """Build R for a match."""

    def diagnose(self, graph: PatternGraph, params: RuleParameters) -> List[Diagnostic]:
        """Findings about near-matches (e.g. missing alternative paths)."""
        return []

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.RULE_NAME} {self.STRATEGY_TAG.value}>"
