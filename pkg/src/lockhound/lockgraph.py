"""Lock-order graph and deadlock cycle reporting.

A graph edge (l1, p, l2) records that at place p some thread already holding
l1 may acquire l2. Cycles over at least two locks are deadlock candidates;
each candidate is kept only if every pair of its places can actually overlap
in time (see nonconc). STAR participates as a lock that aliases everything:
before cycle enumeration the edge set is closed so that every STAR endpoint
also stands for each concrete lock of the graph, which is what lets a cycle
pass through an unresolved acquisition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from .frontend.icfa import ICFA, LockOp
from .locksets import LocksetResults
from .places import Place
from .pointsto import STAR, PointsToResult, obj_label
from .nonconc import NonConcurrency


@dataclass(frozen=True)
class LockEdge:
    held: object      # abstract lock object or STAR
    place: Place
    acquired: object  # abstract lock object or STAR
    line: int = 0     # source line of the acquiring statement

    def __repr__(self) -> str:
        return f"({obj_label(self.held)}, p{list(self.place)}, {obj_label(self.acquired)})"


def build_lock_graph(icfa: ICFA, locks: LocksetResults,
                     pt: PointsToResult) -> list[LockEdge]:
    """Direct sweep over solved places; no extra fixpoint is needed."""
    out: list[LockEdge] = []
    seen: set[tuple] = set()
    for pid, (_, ls) in locks.may.states.items():
        p = locks.may.places.resolve(pid)
        for e in icfa.out_edges[p[-1]]:
            if not isinstance(e.op, LockOp):
                continue
            vs = pt.value_set(p, e.op.arg, at_sync=True)
            acquired = [STAR] if vs is STAR else sorted(vs, key=obj_label)
            for l1 in sorted(ls, key=obj_label):
                for l2 in acquired:
                    key = (id(l1) if l1 is STAR else l1, pid,
                           id(l2) if l2 is STAR else l2)
                    if key not in seen:
                        seen.add(key)
                        out.append(LockEdge(l1, p, l2, e.line))
    out.sort(key=lambda e: (e.line, e.place, _node_key(e.held),
                            _node_key(e.acquired)))
    return out


# ------------------------------------------------------------------ closure


def edge_locks(edges) -> set:
    """Concrete locks mentioned by an edge set."""
    out = set()
    for (a, _, b) in edges:
        if a is not STAR:
            out.add(a)
        if b is not STAR:
            out.add(b)
    return out


def cl(edges: frozenset) -> frozenset:
    """Close a set of (l1, p, l2) triples over STAR aliasing.

    Each STAR endpoint additionally stands for every concrete lock of the
    set. One pass is enough: the result mentions no new locks, so closing
    again adds nothing.
    """
    locks = edge_locks(edges)
    out = set(edges)
    for (a, p, b) in edges:
        heads = locks | {STAR} if a is STAR else {a}
        tails = locks | {STAR} if b is STAR else {b}
        for a2 in heads:
            for b2 in tails:
                out.add((a2, p, b2))
    return frozenset(out)


def close_lock_edges(edges: list[LockEdge]) -> list[LockEdge]:
    """Apply the STAR closure to built edges, keeping place and line intact.

    Cycle enumeration must run on the closed graph: an unresolved acquisition
    such as (m1, p, STAR) only meets a concrete edge (m2, q, m1) once the
    closure has spelled out (m1, p, m2).
    """
    locks = sorted({e.held for e in edges if e.held is not STAR}
                   | {e.acquired for e in edges if e.acquired is not STAR},
                   key=obj_label)
    out = list(edges)
    seen = {(_node_key(e.held), e.place, _node_key(e.acquired)) for e in edges}
    for e in edges:
        heads = locks + [STAR] if e.held is STAR else [e.held]
        tails = locks + [STAR] if e.acquired is STAR else [e.acquired]
        for a in heads:
            for b in tails:
                key = (_node_key(a), e.place, _node_key(b))
                if key not in seen:
                    seen.add(key)
                    out.append(LockEdge(a, e.place, b, e.line))
    return out


# ------------------------------------------------------------------- cycles


@dataclass
class Cycle:
    edges: tuple[LockEdge, ...]
    pruned_by: str | None = None
    failed_pair: tuple[Place, Place] | None = None

    @property
    def locks(self) -> list[str]:
        return [obj_label(e.acquired) for e in self.edges]

    @property
    def places(self) -> list[Place]:
        return [e.place for e in self.edges]


@dataclass
class CycleSearch:
    cycles: list[Cycle] = field(default_factory=list)
    truncated: bool = False
    combos_seen: int = 0


def _node_key(n) -> str:
    return obj_label(n)


def enumerate_cycles(edges: list[LockEdge], cap: int = 2000) -> CycleSearch:
    """All elementary cycles over >= 2 locks, expanded to edge combinations.

    Parallel edges between the same pair of locks multiply out; the search
    stops recording once cap combinations were produced.
    """
    g = nx.DiGraph()
    parallel: dict[tuple, list[LockEdge]] = {}
    for e in edges:
        hk, ak = _node_key(e.held), _node_key(e.acquired)
        g.add_edge(hk, ak)
        parallel.setdefault((hk, ak), []).append(e)
    for es in parallel.values():
        es.sort(key=lambda e: (e.line, e.place))

    res = CycleSearch()
    # Rotate every cycle to start at its smallest node so reports do not
    # depend on graph insertion order, then enumerate short cycles first.
    node_cycles = []
    for c in nx.simple_cycles(g):
        i = min(range(len(c)), key=lambda k: c[k])
        node_cycles.append(c[i:] + c[:i])
    node_cycles.sort(key=lambda c: (len(c), tuple(c)))
    for nodes in node_cycles:
        if len(nodes) < 2:
            continue  # one lock alone cannot form an order cycle
        legs = [(nodes[k], nodes[(k + 1) % len(nodes)]) for k in range(len(nodes))]
        pools = [parallel[leg] for leg in legs]
        for combo in itertools.product(*pools):
            if res.combos_seen >= cap:
                res.truncated = True
                return res
            res.combos_seen += 1
            res.cycles.append(Cycle(edges=tuple(combo)))
    return res


# ------------------------------------------------------------- concurrency


def pair_concurrent(nc: NonConcurrency, p1: Place, p2: Place) -> tuple[bool, str | None]:
    """May two lock-graph places overlap in time? (answer, pruning reason)."""
    reason = nc.check(p1, p2)
    return reason is None, reason


def filter_cycles(search: CycleSearch, nc: NonConcurrency | None) -> None:
    """Mark pruned cycles in place; nc=None keeps every candidate."""
    for cyc in search.cycles:
        if nc is None:
            continue
        for e1, e2 in itertools.combinations(cyc.edges, 2):
            ok, reason = pair_concurrent(nc, e1.place, e2.place)
            if not ok:
                cyc.pruned_by = reason
                cyc.failed_pair = (e1.place, e2.place)
                break


def find_deadlocks(icfa: ICFA, locks: LocksetResults, pt: PointsToResult,
                   nc: NonConcurrency | None, cap: int = 2000) -> tuple[list[LockEdge], CycleSearch]:
    edges = build_lock_graph(icfa, locks, pt)
    search = enumerate_cycles(close_lock_edges(edges), cap=cap)
    filter_cycles(search, nc)
    return edges, search


# ------------------------------------------------------------------- output


def lockgraph_dot(edges: list[LockEdge]) -> str:
    lines = ["digraph lockgraph {", "  node [shape=box, fontsize=10];"]
    nodes = sorted({_node_key(e.held) for e in edges}
                   | {_node_key(e.acquired) for e in edges})
    for n in nodes:
        shape = ', style=dashed' if n == "*" else ""
        lines.append(f'  "{n}" [label="{n}"{shape}];')
    for e in sorted(edges, key=lambda e: (_node_key(e.held), _node_key(e.acquired), e.line)):
        lines.append(f'  "{_node_key(e.held)}" -> "{_node_key(e.acquired)}"'
                     f' [label="line {e.line}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
