"""
Small graph builders shared by the test modules.
"""

import random
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

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

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ITALY_INVOICE = FIXTURES / "italy-invoice.json"

EdgeSpec = Union[Tuple[str, str], Tuple[str, str, Optional[str]]]


def make_node(
    node_id: str,
    kind: Union[PatternKind, str],
    *,
    config: Optional[Dict[str, str]] = None,
    ins: Iterable[str] = (),
    outs: Iterable[str] = (),
    throughput: Optional[float] = None,
    latency: float = 0.0,
    side_effect_free: bool = True,
    read_only: bool = False,
    message_access: bool = True,
    segments: Optional[int] = None,
    failures: Optional[FailureStats] = None,
    custom_name: Optional[str] = None,
) -> PatternNode:
    return PatternNode(
        id=node_id,
        kind=PatternKind(kind),
        custom_name=custom_name,
        properties=NodeProperties(
            side_effect_free=side_effect_free,
            read_only=read_only,
            message_access=message_access,
            configuration=dict(config or {}),
        ),
        contract=Contract(in_elements=frozenset(ins), out_elements=frozenset(outs)),
        cost=CostAnnotation(
            latency_ms=latency,
            throughput_msg_per_s=throughput,
            segment_count_in=segments,
            segment_count_out=segments,
            failure_stats=failures,
        ),
    )


def make_graph(nodes: Sequence[PatternNode], edges: Iterable[EdgeSpec]) -> PatternGraph:
    return PatternGraph.build(
        nodes,
        [Edge(source=e[0], target=e[1], condition=e[2] if len(e) > 2 else None) for e in edges],
    )


def linear_process(*nodes: PatternNode) -> PatternGraph:
    """start -> nodes... -> end."""
    start = make_node("start", PatternKind.START_EVENT)
    end = make_node("end", PatternKind.END_EVENT)
    ids = ["start"] + [node.id for node in nodes] + ["end"]
    return make_graph([start, *nodes, end], zip(ids, ids[1:]))


def with_events(nodes: Sequence[PatternNode], edges: Iterable[EdgeSpec], first: str, last: str) -> PatternGraph:
    """Add start -> first and last -> end around a hand-wired body."""
    start = make_node("start", PatternKind.START_EVENT)
    end = make_node("end", PatternKind.END_EVENT)
    return make_graph([start, *nodes, end], [("start", first), *edges, (last, "end")])


def enricher(node_id: str, **kwargs) -> PatternNode:
    return make_node(node_id, PatternKind.CONTENT_ENRICHER, **kwargs)


RANDOM_KINDS = (
    PatternKind.CONTENT_ENRICHER,
    PatternKind.CONTENT_FILTER,
    PatternKind.MESSAGE_FILTER,
    PatternKind.MESSAGE_TRANSLATOR,
    PatternKind.MESSAGE_ENCODER,
    PatternKind.EXTERNAL_CALL,
    PatternKind.EXTERNAL_ENDPOINT,
    PatternKind.MULTICAST,
    PatternKind.JOIN_ROUTER,
    PatternKind.CONTENT_BASED_ROUTER,
    PatternKind.AGGREGATOR,
)


def random_process(rng: random.Random, size: Tuple[int, int] = (3, 10)) -> PatternGraph:
    """
    Seeded random process: start -> n0..nk -> end, every node on a
    start-to-end path and every edge pointing forward, so the graph is valid.
    """
    ids = [f"n{i}" for i in range(rng.randint(*size))]
    order = ["start"] + ids + ["end"]
    nodes = [make_node("start", PatternKind.START_EVENT), make_node("end", PatternKind.END_EVENT)]
    for node_id in ids:
        nodes.append(_random_node(rng, node_id, ids))

    def condition() -> Optional[str]:
        return rng.choice([None, None, None, "c", "exception"])

    edges = set()
    for position, node_id in enumerate(order[1:-1], start=1):
        edges.add((order[rng.randrange(0, position)], node_id, condition()))
        edges.add((node_id, order[rng.randrange(position + 1, len(order))], condition()))
        for _ in range(rng.randint(0, 3)):
            edges.add((node_id, order[rng.randrange(position + 1, len(order))], condition()))
    return make_graph(nodes, sorted(edges, key=lambda e: (e[0], e[1], e[2] or "")))


def _random_node(rng: random.Random, node_id: str, ids: Sequence[str]) -> PatternNode:
    kind = rng.choice(RANDOM_KINDS)
    config: Dict[str, str] = {}
    if rng.random() < 0.2:
        config["mode"] = "fast"
    ins: FrozenSet[str] = frozenset()
    outs: FrozenSet[str] = frozenset()
    if rng.random() < 0.6:
        outs = frozenset(e for e in "abc" if rng.random() < 0.7) or frozenset("a")
        ins = frozenset(e for e in outs if rng.random() < 0.6)
    failures = None
    side_effect_free = True
    if kind == PatternKind.EXTERNAL_CALL:
        side_effect_free = False
        failures = FailureStats(
            consecutive_failures=rng.choice([0, 5]),
            failure_rate=rng.choice([0.0, 0.8]),
        )
        for key in ("messageLimited", "acceptsMultiMessages"):
            if rng.random() < 0.5:
                config[key] = "true"
        if rng.random() < 0.3:
            config["alternative"] = rng.choice(list(ids))
    elif kind == PatternKind.EXTERNAL_ENDPOINT:
        side_effect_free = False
        if rng.random() < 0.5:
            config["delegationCapable"] = "true"
    return make_node(
        node_id,
        kind,
        config=config,
        ins=ins,
        outs=outs,
        throughput=rng.choice([None, 10.0, 50.0, 200.0]),
        latency=float(rng.choice([0, 1, 5])),
        side_effect_free=side_effect_free,
        failures=failures,
    )


CHAIN_KINDS = (
    PatternKind.CONTENT_ENRICHER,
    PatternKind.MESSAGE_TRANSLATOR,
    PatternKind.MESSAGE_ENCODER,
    PatternKind.MESSAGE_SIGNER,
)


def random_pipeline(rng: random.Random, segments: Tuple[int, int] = (1, 4)) -> PatternGraph:
    """
    Seeded random pipeline of pattern chains separated by read-only barriers.

    Every node passes the whole message on and adds at most one element of
    its own; some barriers are routers with a dead branch. No cost data.
    """
    available = {"m"}
    nodes = [make_node("r0", PatternKind.IDEMPOTENT_RECEIVER, read_only=True, outs=available)]
    edges: List[EdgeSpec] = [("start", "r0")]
    previous, condition = "r0", None

    def reads() -> FrozenSet[str]:
        return frozenset(rng.sample(sorted(available), rng.randint(1, len(available))))

    for s in range(rng.randint(*segments)):
        for i in range(rng.randint(1, 4)):
            node_id = f"s{s}_{i}"
            fresh = f"e{s}_{i}"
            nodes.append(make_node(
                node_id,
                rng.choice(CHAIN_KINDS),
                config={"writes": fresh},
                ins=reads(),
                outs=available | {fresh},
            ))
            available = available | {fresh}
            edges.append((previous, node_id, condition))
            previous, condition = node_id, None
        barrier = f"b{s}"
        if rng.random() < 0.3:
            nodes.append(make_node(
                barrier, PatternKind.CONTENT_BASED_ROUTER, read_only=True, ins=reads(), outs=available
            ))
            nodes.append(make_node(
                f"d{s}", PatternKind.IDEMPOTENT_RECEIVER, read_only=True, ins=reads(), outs=available
            ))
            edges += [(previous, barrier, condition), (barrier, f"d{s}", "otherwise")]
            previous, condition = barrier, "ok"
        else:
            nodes.append(make_node(barrier, PatternKind.MESSAGE_FILTER, read_only=True, ins=reads(), outs=available))
            edges.append((previous, barrier, condition))
            previous, condition = barrier, None

    edges.append((previous, "end", condition))
    nodes += [make_node("start", PatternKind.START_EVENT), make_node("end", PatternKind.END_EVENT)]
    return make_graph(nodes, edges)
