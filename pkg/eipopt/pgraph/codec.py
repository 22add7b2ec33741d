"""
Process-JSON codec.

The wire schema uses camelCase field names and rejects unknown fields.
Schema violations raise SchemaError carrying a JSON path.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from eipopt.exceptions import SchemaError
from eipopt.models.pattern_graph import (
    Contract,
    CostAnnotation,
    Edge,
    FailureStats,
    NodeProperties,
    PatternGraph,
    PatternKind,
    PatternNode,
)

logger = logging.getLogger(__name__)

CUSTOM_PREFIX = "Custom:"


# ============================================================================
# Wire Documents
# ============================================================================

class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PropertiesDocument(_Document):
    side_effect_free: bool = Field(True, alias="sideEffectFree")
    read_only: bool = Field(False, alias="readOnly")
    message_access: bool = Field(True, alias="messageAccess")
    configuration: Dict[str, str] = Field(default_factory=dict)


class ContractDocument(_Document):
    in_elements: List[str] = Field(default_factory=list, alias="in")
    out_elements: List[str] = Field(default_factory=list, alias="out")


class SegmentsDocument(_Document):
    segments_in: Optional[int] = Field(None, alias="in")
    segments_out: Optional[int] = Field(None, alias="out")


class FailuresDocument(_Document):
    consecutive_failures: int = Field(0, alias="consecutiveFailures")
    failure_rate: float = Field(0.0, alias="failureRate")


class CostDocument(_Document):
    latency_ms: float = Field(0.0, alias="latencyMs")
    throughput_msg_per_s: Optional[float] = Field(None, alias="throughputMsgPerS")
    segments: Optional[SegmentsDocument] = None
    failures: Optional[FailuresDocument] = None


class NodeDocument(_Document):
    id: str
    kind: str
    properties: PropertiesDocument = Field(default_factory=PropertiesDocument)
    contract: ContractDocument = Field(default_factory=ContractDocument)
    cost: CostDocument = Field(default_factory=CostDocument)


class EdgeDocument(_Document):
    source: str = Field(..., alias="from")
    target: str = Field(..., alias="to")
    condition: Optional[str] = None


class ProcessDocument(_Document):
    nodes: List[NodeDocument] = Field(default_factory=list)
    edges: List[EdgeDocument] = Field(default_factory=list)


# ============================================================================
# Kind Strings
# ============================================================================

def parse_kind(text: str) -> Tuple[PatternKind, Optional[str]]:
    """Parse "MessageFilter" or "Custom:<name>"; raises ValueError."""
    if text.startswith(CUSTOM_PREFIX) and len(text) > len(CUSTOM_PREFIX):
        return PatternKind.CUSTOM, text[len(CUSTOM_PREFIX):]
    kind = PatternKind(text)
    if kind == PatternKind.CUSTOM:
        raise ValueError("Custom kind requires a name")
    return kind, None


def format_kind(node: PatternNode) -> str:
    if node.kind == PatternKind.CUSTOM:
        return f"{CUSTOM_PREFIX}{node.custom_name}"
    if node.kind is None:
        raise SchemaError("cannot serialize an unlabelled node", node_id=node.id)
    return node.kind.value


# ============================================================================
# Decode
# ============================================================================

def _json_path(loc: Tuple[Any, ...]) -> str:
    path = "$"
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _node_from_document(doc: NodeDocument, index: int) -> PatternNode:
    path = f"$.nodes[{index}]"
    try:
        kind, custom_name = parse_kind(doc.kind)
    except ValueError:
        raise SchemaError(
            f"node '{doc.id}': unknown kind '{doc.kind}'", f"{path}.kind", node_id=doc.id
        ) from None
    try:
        properties = NodeProperties(**doc.properties.model_dump())
    except ValidationError as e:
        raise SchemaError(
            f"node '{doc.id}': {e.errors()[0]['msg']}", f"{path}.properties", node_id=doc.id
        ) from None
    try:
        contract = Contract(
            in_elements=frozenset(doc.contract.in_elements),
            out_elements=frozenset(doc.contract.out_elements),
        )
        cost = CostAnnotation(
            latency_ms=doc.cost.latency_ms,
            throughput_msg_per_s=doc.cost.throughput_msg_per_s,
            segment_count_in=doc.cost.segments.segments_in if doc.cost.segments else None,
            segment_count_out=doc.cost.segments.segments_out if doc.cost.segments else None,
            failure_stats=(
                FailureStats(**doc.cost.failures.model_dump()) if doc.cost.failures else None
            ),
        )
    except ValidationError as e:
        raise SchemaError(
            f"node '{doc.id}': {e.errors()[0]['msg']}", f"{path}.cost", node_id=doc.id
        ) from None
    return PatternNode(
        id=doc.id,
        kind=kind,
        custom_name=custom_name,
        properties=properties,
        contract=contract,
        cost=cost,
    )


def deserialize(data: Union[bytes, str]) -> PatternGraph:
    """
    Decode a process-JSON document.

    Raises:
        SchemaError: On malformed JSON or any schema violation.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SchemaError(f"input is not UTF-8: {e}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg} (line {e.lineno})") from None

    try:
        document = ProcessDocument.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        node_id = _raw_node_id(raw, error["loc"])
        prefix = f"node '{node_id}': " if node_id else ""
        raise SchemaError(f"{prefix}{error['msg']}", _json_path(error["loc"]), node_id=node_id) from None

    nodes: Dict[str, PatternNode] = {}
    for index, node_doc in enumerate(document.nodes):
        if node_doc.id in nodes:
            raise SchemaError(
                f"duplicate node id '{node_doc.id}'", f"$.nodes[{index}].id", node_id=node_doc.id
            )
        nodes[node_doc.id] = _node_from_document(node_doc, index)

    edges = tuple(
        Edge(source=e.source, target=e.target, condition=e.condition) for e in document.edges
    )
    graph = PatternGraph(nodes=nodes, edges=edges)
    logger.debug(f"Decoded process graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
    return graph


def _raw_node_id(raw: Any, loc: Tuple[Any, ...]) -> Optional[str]:
    if len(loc) >= 2 and loc[0] == "nodes" and isinstance(loc[1], int):
        try:
            node_id = raw["nodes"][loc[1]].get("id")
        except (AttributeError, IndexError, KeyError, TypeError):
            return None
        return node_id if isinstance(node_id, str) else None
    return None


def load_graph(path: Union[str, Path]) -> PatternGraph:
    """Read and decode a process-JSON file. OSError propagates to the caller."""
    return deserialize(Path(path).read_bytes())


# ============================================================================
# Encode
# ============================================================================

def _node_to_dict(node: PatternNode) -> Dict[str, Any]:
    cost: Dict[str, Any] = {"latencyMs": node.cost.latency_ms}
    if node.cost.throughput_msg_per_s is not None:
        cost["throughputMsgPerS"] = node.cost.throughput_msg_per_s
    if node.cost.segment_count_in is not None or node.cost.segment_count_out is not None:
        segments: Dict[str, int] = {}
        if node.cost.segment_count_in is not None:
            segments["in"] = node.cost.segment_count_in
        if node.cost.segment_count_out is not None:
            segments["out"] = node.cost.segment_count_out
        cost["segments"] = segments
    if node.cost.failure_stats is not None:
        cost["failures"] = {
            "consecutiveFailures": node.cost.failure_stats.consecutive_failures,
            "failureRate": node.cost.failure_stats.failure_rate,
        }
    return {
        "id": node.id,
        "kind": format_kind(node),
        "properties": {
            "sideEffectFree": node.properties.side_effect_free,
            "readOnly": node.properties.read_only,
            "messageAccess": node.properties.message_access,
            "configuration": dict(sorted(node.config.items())),
        },
        "contract": {
            "in": sorted(node.contract.in_elements),
            "out": sorted(node.contract.out_elements),
        },
        "cost": cost,
    }


def to_document(graph: PatternGraph) -> Dict[str, Any]:
    edges = []
    for edge in graph.edges:
        item: Dict[str, Any] = {"from": edge.source, "to": edge.target}
        if edge.condition is not None:
            item["condition"] = edge.condition
        edges.append(item)
    return {"nodes": [_node_to_dict(node) for node in graph.iter_nodes()], "edges": edges}


def serialize(graph: PatternGraph) -> bytes:
    """Encode a graph as deterministic, indented UTF-8 process-JSON."""
    text = json.dumps(to_document(graph), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")
