"""Control-flow graphs for handler bodies, with dominance and access facts.

Each handler lowers to a graph carrying one instruction per node. Branches
become diamonds whose arms start with `assume` nodes (the negated condition on
the else arm); loops become a skip "head" node with an assume-guarded body
returning to the head over a back edge. Synthetic skip nodes serve as the
entry, the single exit, and branch join points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .ir import (
    Assert,
    Assign,
    Assume,
    Handler,
    Havoc,
    If,
    Instr,
    Program,
    Skip,
    Stmt,
    While,
    instr_reads,
    instr_write,
    negate_cond,
)


class NodeId(NamedTuple):
    """Globally unique node identity: handler name plus per-handler index."""

    handler: str
    index: int

    def __str__(self) -> str:
        return f"{self.handler}:{self.index}"


@dataclass(frozen=True)
class Cfg:
    handler: str
    entry: NodeId
    exit: NodeId
    nodes: tuple[NodeId, ...]  # creation order: entry first, exit last
    edges: frozenset[tuple[NodeId, NodeId]]
    instr: dict[NodeId, Instr]
    loop_heads: frozenset[NodeId]
    back_edges: frozenset[tuple[NodeId, NodeId]]
    loop_exits: dict[NodeId, NodeId]  # exit-arm assume node -> its loop head
    succs: dict[NodeId, tuple[NodeId, ...]]
    preds: dict[NodeId, tuple[NodeId, ...]]


@dataclass(frozen=True)
class AccessInfo:
    """Per-node reads/writes of global variables."""

    loads: frozenset[tuple[NodeId, str]]
    stores: frozenset[tuple[NodeId, str]]


class _Builder:
    def __init__(self, handler: str):
        self.handler = handler
        self.instr: dict[NodeId, Instr] = {}
        self.edges: set[tuple[NodeId, NodeId]] = set()
        self.loop_heads: set[NodeId] = set()
        self.back_edges: set[tuple[NodeId, NodeId]] = set()
        self.loop_exits: dict[NodeId, NodeId] = {}

    def add(self, ins: Instr) -> NodeId:
        n = NodeId(self.handler, len(self.instr))
        self.instr[n] = ins
        return n

    def connect(self, sources: Iterable[NodeId], target: NodeId) -> None:
        for s in sources:
            self.edges.add((s, target))

    def lower_seq(self, stmts: tuple[Stmt, ...], tails: list[NodeId]) -> list[NodeId]:
        for st in stmts:
            tails = self.lower(st, tails)
        return tails

    def lower(self, st: Stmt, tails: list[NodeId]) -> list[NodeId]:
        if isinstance(st, (Assign, Havoc, Assert, Skip, Assume)):
            n = self.add(st)
            self.connect(tails, n)
            return [n]
        if isinstance(st, If):
            arm_true = self.add(Assume(st.cond))
            arm_false = self.add(Assume(negate_cond(st.cond)))
            self.connect(tails, arm_true)
            self.connect(tails, arm_false)
            t_tails = self.lower_seq(st.then, [arm_true])
            f_tails = self.lower_seq(st.orelse, [arm_false])
            join = self.add(Skip())
            self.connect(t_tails + f_tails, join)
            return [join]
        if isinstance(st, While):
            head = self.add(Skip())
            self.loop_heads.add(head)
            self.connect(tails, head)
            arm_true = self.add(Assume(st.cond))
            arm_false = self.add(Assume(negate_cond(st.cond)))
            self.connect([head], arm_true)
            self.connect([head], arm_false)
            self.loop_exits[arm_false] = head
            body_tails = self.lower_seq(st.body, [arm_true])
            for t in body_tails:
                self.edges.add((t, head))
                self.back_edges.add((t, head))
            return [arm_false]
        raise TypeError(f"cannot lower {st!r}")


def build_cfg(handler: Handler) -> Cfg:
    """Lower a handler body to its control-flow graph.

    Adds a synthetic entry and a synthetic single exit; every node is
    reachable from the entry and reaches the exit.
    """
    b = _Builder(handler.name)
    entry = b.add(Skip())
    tails = b.lower_seq(handler.body, [entry])
    exit_ = b.add(Skip())
    b.connect(tails, exit_)

    nodes = tuple(sorted(b.instr, key=lambda n: n.index))
    succs = {n: tuple(sorted((t for s, t in b.edges if s == n), key=lambda n: n.index)) for n in nodes}
    preds = {n: tuple(sorted((s for s, t in b.edges if t == n), key=lambda n: n.index)) for n in nodes}
    return Cfg(
        handler=handler.name,
        entry=entry,
        exit=exit_,
        nodes=nodes,
        edges=frozenset(b.edges),
        instr=b.instr,
        loop_heads=frozenset(b.loop_heads),
        back_edges=frozenset(b.back_edges),
        loop_exits=dict(b.loop_exits),
        succs=succs,
        preds=preds,
    )


def _dominance_sets(nodes: tuple[NodeId, ...], root: NodeId,
                    edges_into: dict[NodeId, tuple[NodeId, ...]]) -> dict[NodeId, set[NodeId]]:
    """Iterative dataflow: dom(n) = {n} plus the intersection of dom(preds)."""
    every = set(nodes)
    dom: dict[NodeId, set[NodeId]] = {n: ({n} if n == root else set(every)) for n in nodes}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == root:
                continue
            incoming = [dom[p] for p in edges_into[n]]
            new = {n} | (set.intersection(*incoming) if incoming else set())
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def _as_relation(sets: dict[NodeId, set[NodeId]]) -> frozenset[tuple[NodeId, NodeId]]:
    return frozenset((a, b) for b, doms in sets.items() for a in doms)


def dominators(g: Cfg) -> frozenset[tuple[NodeId, NodeId]]:
    """Pairs (a, b) where every entry-to-b path passes through a; reflexive."""
    return _as_relation(_dominance_sets(g.nodes, g.entry, g.preds))


def post_dominators(g: Cfg) -> frozenset[tuple[NodeId, NodeId]]:
    """Dual of `dominators` over reversed edges, rooted at the synthetic exit."""
    return _as_relation(_dominance_sets(g.nodes, g.exit, g.succs))


def node_global_reads(ins: Instr) -> tuple[str, ...]:
    seen: list[str] = []
    for v in instr_reads(ins):
        if v.is_global and v.name not in seen:
            seen.append(v.name)
    return tuple(seen)


def node_global_write(ins: Instr) -> str | None:
    w = instr_write(ins)
    return w.name if w is not None and w.is_global else None


def access_info(g: Cfg, program: Program) -> AccessInfo:
    """Classify every node's reads and writes of the program's globals.

    A compound instruction such as `x = x + 1` contributes both a load and a
    store of x at the same node. Assertions and branch conditions load every
    global they mention.
    """
    declared = set(program.global_names())
    loads: set[tuple[NodeId, str]] = set()
    stores: set[tuple[NodeId, str]] = set()
    for n, ins in g.instr.items():
        for name in node_global_reads(ins):
            if name in declared:
                loads.add((n, name))
        w = node_global_write(ins)
        if w is not None and w in declared:
            stores.add((n, w))
    return AccessInfo(loads=frozenset(loads), stores=frozenset(stores))


def build_all(program: Program) -> tuple[list[Cfg], list[AccessInfo]]:
    cfgs = [build_cfg(h) for h in program.handlers]
    infos = [access_info(g, program) for g in cfgs]
    return cfgs, infos


def dump_cfg(g: Cfg) -> list[str]:
    """Line-oriented debug rendering of the graph and its dominance relations."""
    from .ir import format_instr

    lines = [f"cfg {g.handler} entry={g.entry} exit={g.exit}"]
    for n in g.nodes:
        flags = " loop-head" if n in g.loop_heads else ""
        lines.append(f"node {n} {format_instr(g.instr[n])}{flags}")
    for s, t in sorted(g.edges):
        kind = "back" if (s, t) in g.back_edges else "edge"
        lines.append(f"{kind} {s} -> {t}")
    for a, b in sorted(dominators(g)):
        lines.append(f"dom {a} {b}")
    for a, b in sorted(post_dominators(g)):
        lines.append(f"postdom {a} {b}")
    return lines
