"""Finite-depth view of an inverse sequence of graphs.

A point of the inverse limit is only ever seen through a depth-n thread, which
is the same thing as the cylinder of its level-n vertex: bonding maps are total,
so the last vertex forces the whole prefix. Threads therefore store the depth
and the last vertex only.
"""
import logging
from functools import lru_cache
from typing import Hashable, Literal

from pydantic import BaseModel, ConfigDict, field_serializer, model_validator

from src.errors import AxiomViolation, DepthError, StructuralError
from src.graph_core import (
    Graph,
    GraphHom,
    Relation,
    Verdict,
    dump_bonding,
    is_edge_surjective_graph,
    is_graph_cover,
    is_homomorphism,
    token_key,
)
from src.reports import AxiomReport

logger = logging.getLogger(__name__)


class Thread(BaseModel):
    """Compatible tuple ``(x_0, ..., x_n)`` stored as ``(n, x_n)``."""

    model_config = ConfigDict(frozen=True)

    depth: int
    last_vertex: Hashable

    def __str__(self) -> str:
        return f"{self.last_vertex}@{self.depth}"


class GraphSequence(BaseModel):
    """Levels ``G_0..G_N`` with ``bonding[i-1] = phi_i: G_i -> G_{i-1}``."""

    model_config = ConfigDict(frozen=True)

    levels: tuple[Graph, ...]
    bonding: tuple[GraphHom, ...] = ()
    kind: Literal["homomorphisms", "covers"] = "homomorphisms"

    @model_validator(mode="after")
    def _check_shape(self) -> "GraphSequence":
        if not self.levels:
            raise StructuralError("a graph sequence needs at least one level")
        if len(self.bonding) != len(self.levels) - 1:
            raise StructuralError(
                f"{len(self.levels)} levels need {len(self.levels) - 1} bonding maps, got {len(self.bonding)}"
            )
        for i, phi in enumerate(self.bonding, start=1):
            if phi.source.vertices != self.levels[i].vertices:
                raise StructuralError(f"bonding map {i} does not start at level {i}")
            if phi.target.vertices != self.levels[i - 1].vertices:
                raise StructuralError(f"bonding map {i} does not end at level {i - 1}")
        return self

    @field_serializer("bonding")
    def _dump_bonding(self, bonding: tuple) -> list:
        return dump_bonding(bonding)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def phi(self, i: int) -> GraphHom:
        if not 1 <= i <= self.depth:
            raise DepthError(f"no bonding map with index {i} (valid: 1..{self.depth})")
        return self.bonding[i - 1]

    def level(self, i: int) -> Graph:
        _check_depth(self, i)
        return self.levels[i]


def _check_depth(seq: GraphSequence, n: int) -> None:
    if not 0 <= n <= seq.depth:
        raise DepthError(f"depth {n} is outside 0..{seq.depth}")


def validate_sequence(seq: GraphSequence) -> AxiomReport:
    """Check every level/bonding invariant of the declared kind; every violation is listed."""
    report = AxiomReport(subject=f"graph sequence ({seq.kind})", depth=seq.depth)
    axioms = ["homomorphism"]
    if seq.kind == "covers":
        axioms = ["edge-surjective-level", "homomorphism", "graph-cover"]
    report.declare(axioms)
    if seq.kind == "covers":
        for i, graph in enumerate(seq.levels):
            verdict = is_edge_surjective_graph(graph)
            report.record("edge-surjective-level", i, verdict)
    for i in range(1, seq.depth + 1):
        phi = seq.phi(i)
        verdict = is_homomorphism(phi)
        report.record("homomorphism", i, verdict)
        if seq.kind == "covers":
            report.record("graph-cover", i, is_graph_cover(phi) if verdict else verdict)
    logger.debug("validated %s: %d violation(s)", report.subject, len(report.violations))
    return report


def thread_path(seq: GraphSequence, thread: Thread) -> tuple:
    """Recompute the prefix ``(x_0, ..., x_n)`` forced by the bonding maps."""
    _check_depth(seq, thread.depth)
    if thread.last_vertex not in seq.levels[thread.depth].vertices:
        raise StructuralError(f"{thread.last_vertex!r} is not a vertex of level {thread.depth}")
    path = [thread.last_vertex]
    for i in range(thread.depth, 0, -1):
        path.append(seq.bonding[i - 1].mapping[path[-1]])
    return tuple(reversed(path))


def ancestor(seq: GraphSequence, v: Hashable, level: int, target_level: int) -> Hashable:
    """Image of the level-``level`` vertex ``v`` at ``target_level <= level``."""
    if target_level > level:
        raise DepthError(f"cannot project level {level} up to level {target_level}")
    for i in range(level, target_level, -1):
        v = seq.bonding[i - 1].mapping[v]
    return v


def truncate(seq: GraphSequence, thread: Thread, m: int) -> Thread:
    if not 0 <= m <= thread.depth:
        raise DepthError(f"cannot truncate a depth-{thread.depth} thread to depth {m}")
    return Thread(depth=m, last_vertex=ancestor(seq, thread.last_vertex, thread.depth, m))


def children(seq: GraphSequence, level: int, v: Hashable) -> frozenset:
    """Vertices of ``level + 1`` mapped onto ``v``."""
    return seq.phi(level + 1).preimages[v]


def enumerate_threads(seq: GraphSequence, n: int) -> frozenset:
    _check_depth(seq, n)
    return frozenset(Thread(depth=n, last_vertex=v) for v in seq.levels[n].vertices)


@lru_cache(maxsize=256)
def level_pairs(seq: GraphSequence, n: int) -> frozenset:
    """Level-n vertex pairs whose threads are related at every level ``0..n``."""
    _check_depth(seq, n)
    edges = seq.levels[n].edges
    if n == 0:
        return frozenset(edges)
    below = level_pairs(seq, n - 1)
    mapping = seq.bonding[n - 1].mapping
    return frozenset((u, v) for u, v in edges if (mapping[u], mapping[v]) in below)


@lru_cache(maxsize=256)
def successor_map(seq: GraphSequence, n: int) -> dict:
    """Level-n vertex -> level-n vertices it is thread-related to at depth n."""
    out = {v: set() for v in seq.levels[n].vertices}
    for u, v in level_pairs(seq, n):
        out[u].add(v)
    return {v: frozenset(ws) for v, ws in out.items()}


def thread_edge_relation(seq: GraphSequence, n: int) -> Relation:
    pairs = frozenset(
        (Thread(depth=n, last_vertex=u), Thread(depth=n, last_vertex=v)) for u, v in level_pairs(seq, n)
    )
    return Relation.on(enumerate_threads(seq, n), pairs)


def cover_successor(seq: GraphSequence, thread: Thread) -> Thread:
    """The unique depth-(n-1) thread reached from ``thread``.

    Any out-edge at level n determines it; +directionality makes the choice
    irrelevant, and a disagreement is reported as an :class:`AxiomViolation`.
    """
    n = thread.depth
    if n < 1:
        raise DepthError("cover_successor needs a thread of depth at least 1")
    _check_depth(seq, n)
    targets = seq.levels[n].out_neighbors(thread.last_vertex)
    if not targets:
        raise AxiomViolation("edge-surjective-level", (n, thread.last_vertex),
                             f"{thread.last_vertex!r} has no out-edge at level {n}")
    mapping = seq.bonding[n - 1].mapping
    ordered = sorted(targets, key=token_key)
    image = mapping[ordered[0]]
    for y in ordered[1:]:
        if mapping[y] != image:
            raise AxiomViolation("plus-directional", (n, thread.last_vertex, ordered[0], y))
    return Thread(depth=n - 1, last_vertex=image)


def surjectivity_at_depth(seq: GraphSequence, n: int) -> Verdict:
    """True iff every depth-(n-1) thread is the cover successor of some depth-n thread."""
    if n < 1:
        raise DepthError("surjectivity is checked from depth 1 on")
    _check_depth(seq, n)
    hit = set()
    for thread in enumerate_threads(seq, n):
        try:
            hit.add(cover_successor(seq, thread).last_vertex)
        except AxiomViolation as exc:
            return Verdict.failed("not-deterministic", exc.witness, str(exc))
    missed = seq.levels[n - 1].vertices - hit
    if missed:
        v = min(missed, key=token_key)
        return Verdict.failed("not-surjective", Thread(depth=n - 1, last_vertex=v),
                              f"no depth-{n} thread is carried onto {v!r}")
    return Verdict.passed()
