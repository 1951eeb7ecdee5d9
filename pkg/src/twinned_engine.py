"""Twinned sequences (G, F): axioms DS0-DS3b and the finite-depth quotient (Y, T).

G-levels are directed and carry the dynamics; F-levels are symmetric, share
vertex sets and bonding maps with the G-levels, and carry proximity. At depth n
a class of the quotient is a class of the equivalence closure of the raw
depth-n F-relation, and T drops one level: a depth-n class is sent to a
depth-(n-1) class.
"""
import logging
from functools import cached_property, lru_cache
from itertools import product
from typing import Hashable, Iterable, Optional, Union

from pydantic import BaseModel, ConfigDict, field_serializer, model_validator

from src.errors import AxiomViolation, DepthError, StructuralError
from src.graph_core import (
    Graph,
    GraphHom,
    Partition,
    Relation,
    Verdict,
    dump_bonding,
    equivalence_closure,
    pair_key,
    token_key,
)
from src.limit_engine import (
    GraphSequence,
    Thread,
    ancestor,
    enumerate_threads,
    level_pairs,
    successor_map,
    thread_edge_relation,
    truncate,
)
from src.reports import AxiomReport

logger = logging.getLogger(__name__)

TWINNED_AXIOMS = ["DS0", "DS1", "DS2", "DS3", "DS3b"]


class TwinnedSequence(BaseModel):
    model_config = ConfigDict(frozen=True)

    g_levels: tuple[Graph, ...]
    f_levels: tuple[Graph, ...]
    bonding: tuple[GraphHom, ...] = ()

    @model_validator(mode="after")
    def _check_lengths(self) -> "TwinnedSequence":
        if not self.g_levels:
            raise StructuralError("a twinned sequence needs at least one level")
        if len(self.f_levels) != len(self.g_levels):
            raise StructuralError(f"{len(self.g_levels)} G-levels but {len(self.f_levels)} F-levels")
        if len(self.bonding) != len(self.g_levels) - 1:
            raise StructuralError(
                f"{len(self.g_levels)} levels need {len(self.g_levels) - 1} bonding maps, got {len(self.bonding)}"
            )
        for i, phi in enumerate(self.bonding, start=1):
            if phi.source.vertices != self.g_levels[i].vertices or phi.target.vertices != self.g_levels[i - 1].vertices:
                raise StructuralError(f"bonding map {i} does not join G-levels {i} and {i - 1}")
        return self

    @field_serializer("bonding")
    def _dump_bonding(self, bonding: tuple) -> list:
        return dump_bonding(bonding)

    @property
    def depth(self) -> int:
        return len(self.g_levels) - 1

    @cached_property
    def g_sequence(self) -> GraphSequence:
        return GraphSequence(levels=self.g_levels, bonding=self.bonding)

    @cached_property
    def f_sequence(self) -> GraphSequence:
        """The F-levels with the shared bonding maps; requires matching vertex sets (DS2)."""
        if any(f.vertices != g.vertices for f, g in zip(self.f_levels, self.g_levels)):
            raise StructuralError("F-levels and G-levels have different vertex sets")
        bonding = tuple(
            phi.rebase(self.f_levels[i], self.f_levels[i - 1]) for i, phi in enumerate(self.bonding, start=1)
        )
        return GraphSequence(levels=self.f_levels, bonding=bonding)

    def truncated(self, depth: int) -> "TwinnedSequence":
        _check_depth(self, depth)
        return TwinnedSequence(
            g_levels=self.g_levels[: depth + 1],
            f_levels=self.f_levels[: depth + 1],
            bonding=self.bonding[:depth],
        )


class ClassAtDepth(BaseModel):
    model_config = ConfigDict(frozen=True)

    depth: int
    members: frozenset[Thread]

    def vertices(self) -> frozenset:
        return frozenset(t.last_vertex for t in self.members)

    def sorted_members(self) -> list[Thread]:
        return sorted(self.members, key=lambda t: token_key(t.last_vertex))

    def representative(self) -> Thread:
        return self.sorted_members()[0]


class CylinderUnion(BaseModel):
    """Finite union of cylinders, each marked by ``(level, vertex)``.

    Built through :func:`normalize_markers`, which gives every union one
    form: no marker lies under a coarser marker, and no vertex has all of its
    children marked.
    """

    model_config = ConfigDict(frozen=True)

    markers: frozenset[tuple[int, Hashable]]

    def expand(self, ts: TwinnedSequence, level: int) -> frozenset:
        """The level-``level`` vertices whose cylinders make up this union."""
        seq = ts.g_sequence
        out = set()
        for marker_level, v in self.markers:
            if marker_level > level:
                raise DepthError(f"cannot expand a level-{marker_level} marker at level {level}")
            out.update(_descendants(seq, marker_level, frozenset([v]), level))
        return frozenset(out)


def _check_depth(ts: TwinnedSequence, n: int) -> None:
    if not 0 <= n <= ts.depth:
        raise DepthError(f"depth {n} is outside 0..{ts.depth}")


def _descendants(seq: GraphSequence, level: int, vertices: frozenset, target: int) -> frozenset:
    current = set(vertices)
    for i in range(level, target):
        preimages = seq.bonding[i].preimages
        current = {w for v in current for w in preimages[v]}
    return frozenset(current)


def normalize_markers(ts: TwinnedSequence, markers: Iterable[tuple[int, Hashable]]) -> CylinderUnion:
    """Drop markers under coarser markers, then merge complete sibling families into their parent."""
    markers = set(markers)
    seq = ts.g_sequence
    kept = {
        (level, v) for level, v in markers
        if not any((i, ancestor(seq, v, level, i)) in markers for i in range(level))
    }
    deepest = max((level for level, _ in kept), default=0)
    for level in range(deepest, 0, -1):
        phi = seq.bonding[level - 1]
        here = {v for marker_level, v in kept if marker_level == level}
        for parent in sorted({phi.mapping[v] for v in here}, key=token_key):
            family = phi.preimages[parent]
            if family <= here:
                kept -= {(level, v) for v in family}
                kept.add((level - 1, parent))
    return CylinderUnion(markers=frozenset(kept))


# --- axioms -----------------------------------------------------------------


def validate_twinned(ts: TwinnedSequence) -> AxiomReport:
    """Exhaustive DS0-DS3b scan; every violation is reported with its level and witness."""
    report = AxiomReport(subject="twinned sequence", depth=ts.depth)
    report.declare(TWINNED_AXIOMS)

    g0 = ts.g_levels[0]
    if len(g0.vertices) == 1:
        report.passed("DS0", 0)
    else:
        report.fail("DS0", 0, len(g0.vertices), f"G_0 has {len(g0.vertices)} vertices, expected 1")

    for i in range(ts.depth + 1):
        _check_ds1(ts, i, report)
        _check_ds2(ts, i, report)
    shapes_agree = not report.failures("DS2") or all(
        f.vertices == g.vertices for f, g in zip(ts.f_levels, ts.g_levels)
    )
    for i in range(1, ts.depth + 1):
        if shapes_agree:
            _check_ds3(ts, i, report)
            _check_ds3b(ts, i, report)
        else:
            report.fail("DS3", i, None, "skipped: vertex sets of G and F differ")
            report.fail("DS3b", i, None, "skipped: vertex sets of G and F differ")
    logger.debug("twinned validation: %d violation(s) over %d levels", len(report.violations), ts.depth + 1)
    return report


def _check_ds1(ts: TwinnedSequence, i: int, report: AxiomReport) -> None:
    graph = ts.g_levels[i]
    if graph.kind != "directed":
        report.fail("DS1", i, graph.kind, "G-levels must be directed graphs")
        return
    for v in graph.sorted_vertices():
        if not graph.out_map[v]:
            report.fail("DS1", i, v, f"vertex {v!r} of G_{i} has no outgoing edge")
            return
    if i == 0:
        report.passed("DS1", i)
        return
    phi = ts.bonding[i - 1]
    image = set()
    for u, v in graph.sorted_edges():
        pair = (phi.mapping[u], phi.mapping[v])
        if pair not in ts.g_levels[i - 1].edges:
            report.fail("DS1", i, (u, v), f"G-edge {(u, v)!r} maps to non-edge {pair!r}")
            return
        image.add(pair)
    missed = ts.g_levels[i - 1].edges - image
    if missed:
        edge = min(missed, key=pair_key)
        report.fail("DS1", i, edge, f"G-edge {edge!r} of level {i - 1} is not hit by phi_{i}")
        return
    report.passed("DS1", i)


def _check_ds2(ts: TwinnedSequence, i: int, report: AxiomReport) -> None:
    f, g = ts.f_levels[i], ts.g_levels[i]
    if f.vertices != g.vertices:
        diff = sorted(f.vertices ^ g.vertices, key=token_key)
        report.fail("DS2", i, diff[0], f"vx(G_{i}) and vx(F_{i}) differ")
        return
    if f.kind != "symmetric":
        report.fail("DS2", i, f.kind, f"F_{i} must be a symmetric graph")
        return
    for v in f.sorted_vertices():
        if (v, v) not in f.edges:
            report.fail("DS2", i, v, f"F_{i} lacks the self-loop at {v!r}")
            return
    if i > 0:
        phi = ts.bonding[i - 1].mapping
        below = ts.f_levels[i - 1].edges
        for u, v in f.sorted_edges():
            if (phi[u], phi[v]) not in below:
                report.fail("DS2", i, (u, v), f"F-edge {(u, v)!r} maps to non-edge {(phi[u], phi[v])!r}")
                return
    report.passed("DS2", i)


def _successor_images(ts: TwinnedSequence, i: int) -> dict:
    """Level-i vertex -> images under phi_i of its G_i out-neighbours."""
    phi = ts.bonding[i - 1].mapping
    return {v: frozenset(phi[w] for w in targets) for v, targets in ts.g_levels[i].out_map.items()}


def _check_ds3(ts: TwinnedSequence, i: int, report: AxiomReport) -> None:
    images = _successor_images(ts, i)
    below = ts.f_levels[i - 1].edges
    out = ts.g_levels[i].out_map
    phi = ts.bonding[i - 1].mapping
    for a, b in ts.f_levels[i].sorted_edges():
        for x, y in product(sorted(images[a], key=token_key), sorted(images[b], key=token_key)):
            if (x, y) not in below:
                a_succ = min((w for w in out[a] if phi[w] == x), key=token_key)
                b_succ = min((w for w in out[b] if phi[w] == y), key=token_key)
                report.fail("DS3", i, (a, b, a_succ, b_succ),
                            f"F-edge {(a, b)!r} with successors {a_succ!r}, {b_succ!r} but {(x, y)!r} not in F_{i - 1}")
                return
    report.passed("DS3", i)


def _check_ds3b(ts: TwinnedSequence, i: int, report: AxiomReport) -> None:
    f = ts.f_levels[i]
    phi = ts.bonding[i - 1].mapping
    below = ts.f_levels[i - 1].edges
    for b in f.sorted_vertices():
        neighbours = sorted(f.out_map[b], key=token_key)
        by_image = {}
        for a in neighbours:
            by_image.setdefault(phi[a], a)
        for (x, a), (z, c) in product(by_image.items(), repeat=2):
            if (x, z) not in below:
                report.fail("DS3b", i, (a, b, c),
                            f"F-edges {(a, b)!r}, {(b, c)!r} but {(x, z)!r} not in F_{i - 1}")
                return
    report.passed("DS3b", i)


# --- quotient ---------------------------------------------------------------


def f_relation_at_depth(ts: TwinnedSequence, n: int) -> Relation:
    _check_depth(ts, n)
    return thread_edge_relation(ts.f_sequence, n)


@lru_cache(maxsize=128)
def _partition(ts: TwinnedSequence, n: int) -> Partition:
    relation = Relation.on(ts.g_levels[n].vertices, level_pairs(ts.f_sequence, n))
    return equivalence_closure(relation)


def _as_class(n: int, members: Iterable) -> ClassAtDepth:
    return ClassAtDepth(depth=n, members=frozenset(Thread(depth=n, last_vertex=v) for v in members))


def quotient_at_depth(ts: TwinnedSequence, n: int) -> tuple[ClassAtDepth, ...]:
    """Classes of the equivalence closure of the depth-n F-relation, in canonical order."""
    _check_depth(ts, n)
    return tuple(_as_class(n, members) for members in _partition(ts, n).classes)


def class_of(ts: TwinnedSequence, thread: Thread) -> ClassAtDepth:
    _check_depth(ts, thread.depth)
    return _as_class(thread.depth, _partition(ts, thread.depth).class_of(thread.last_vertex))


def truncate_class(ts: TwinnedSequence, c: ClassAtDepth) -> ClassAtDepth:
    """The depth-(n-1) class holding the prefixes of ``c``'s members."""
    if c.depth < 1:
        raise DepthError("cannot truncate a depth-0 class")
    prefixes = {truncate(ts.g_sequence, t, c.depth - 1).last_vertex for t in c.members}
    partition = _partition(ts, c.depth - 1)
    indices = {partition.index_of(v) for v in prefixes}
    if len(indices) != 1:
        raise AxiomViolation("DS2", sorted(prefixes, key=token_key),
                             "prefixes of one class fall into several classes")
    return _as_class(c.depth - 1, partition.classes[indices.pop()])


def g_successors(ts: TwinnedSequence, thread: Thread) -> frozenset:
    """Depth-n threads ``y`` with ``(x_i, y_i)`` a G-edge at every level ``i <= n``."""
    _check_depth(ts, thread.depth)
    targets = successor_map(ts.g_sequence, thread.depth)[thread.last_vertex]
    return frozenset(Thread(depth=thread.depth, last_vertex=v) for v in targets)


def t_step(ts: TwinnedSequence, c: ClassAtDepth) -> ClassAtDepth:
    """Image of a depth-n class under T, as a depth-(n-1) class.

    Every member and every G-successor is tried; all of them must land in one
    class, otherwise the twinned axioms are broken and an AxiomViolation with
    the two disagreeing successors is raised.
    """
    n = c.depth
    if n < 1:
        raise DepthError("t_step needs a class of depth at least 1")
    _check_depth(ts, n)
    partition = _partition(ts, n - 1)
    mapping = ts.bonding[n - 1].mapping
    succ = successor_map(ts.g_sequence, n)
    found: Optional[tuple[int, tuple]] = None
    for member in c.sorted_members():
        targets = succ[member.last_vertex]
        if not targets:
            raise AxiomViolation("DS1", (n, member.last_vertex), f"{member} has no G-successor")
        for y in sorted(targets, key=token_key):
            index = partition.index_of(mapping[y])
            if found is None:
                found = (index, (member.last_vertex, y))
            elif index != found[0]:
                raise AxiomViolation("DS3", (found[1], (member.last_vertex, y)),
                                     f"successors of class members land in different depth-{n - 1} classes")
    return _as_class(n - 1, partition.classes[found[0]])


def ds3b_projection_check(ts: TwinnedSequence, n: int) -> Verdict:
    """Every 2-chain of the raw depth-n F-relation projects into the raw depth-(n-1) relation."""
    if n < 1:
        raise DepthError("the projection property starts at depth 1")
    _check_depth(ts, n)
    raw = successor_map(ts.f_sequence, n)
    below = level_pairs(ts.f_sequence, n - 1)
    mapping = ts.bonding[n - 1].mapping
    for y in sorted(raw, key=token_key):
        images = {}
        for x in sorted(raw[y], key=token_key):
            images.setdefault(mapping[x], x)
        for (px, x), (pz, z) in product(images.items(), repeat=2):
            if (px, pz) not in below:
                return Verdict.failed("DS3b-projection", (x, y, z),
                                      f"chain {x!r}~{y!r}~{z!r} does not project into depth {n - 1}")
    return Verdict.passed()


# --- neighbourhoods from the continuity argument ----------------------------


def _f_neighbourhood(ts: TwinnedSequence, level: int, vertices: Iterable) -> frozenset:
    out = ts.f_levels[level].out_map
    return frozenset(w for v in vertices for w in out[v])


def _bar_levels(ts: TwinnedSequence, start: frozenset, j: int, i: int) -> frozenset:
    """Level-i vertex set of the iterated fattening started from level-j vertices ``start``."""
    if not 0 <= j <= i <= ts.depth:
        raise DepthError(f"need 0 <= j={j} <= i={i} <= {ts.depth}")
    current = _f_neighbourhood(ts, j, start)
    for level in range(j + 1, i + 1):
        refined = _descendants(ts.g_sequence, level - 1, current, level)
        current = _f_neighbourhood(ts, level, refined)
    return current


def _vertex_at(ts: TwinnedSequence, x: Thread, j: int) -> Hashable:
    if j > x.depth:
        raise DepthError(f"thread of depth {x.depth} has no level-{j} vertex")
    return ancestor(ts.g_sequence, x.last_vertex, x.depth, j)


def nbhd_bar(ts: TwinnedSequence, x: Thread, j: int) -> CylinderUnion:
    """Union of the depth-j cylinders whose level-j vertex is F_j-adjacent to ``x_j``."""
    return nbhd_bar_iter(ts, x, j, j)


def nbhd_bar_iter(ts: TwinnedSequence, x: Union[Thread, Iterable[Thread]], j: int, i: int) -> CylinderUnion:
    """``C(x, j, i)``: fatten at level j, then refine and fatten again at every level up to i.

    ``x`` may be one thread or a set of threads (the fattening of a set is the
    union of the fattenings of its members).
    """
    threads = [x] if isinstance(x, Thread) else list(x)
    start = frozenset(_vertex_at(ts, t, j) for t in threads)
    return normalize_markers(ts, ((i, v) for v in _bar_levels(ts, start, j, i)))


def nbhd_tilde(ts: TwinnedSequence, x: Thread, j: int, cap: int) -> CylinderUnion:
    """Union of ``C(x, j, i)`` for ``j <= i <= cap``, normalized."""
    if not j <= cap:
        raise DepthError(f"need j={j} <= cap={cap}")
    start = frozenset([_vertex_at(ts, x, j)])
    markers = set()
    current = _f_neighbourhood(ts, j, start)
    markers.update((j, v) for v in current)
    for level in range(j + 1, cap + 1):
        refined = _descendants(ts.g_sequence, level - 1, current, level)
        current = _f_neighbourhood(ts, level, refined)
        markers.update((level, v) for v in current)
    return normalize_markers(ts, markers)


def continuity_check(ts: TwinnedSequence, x: Thread, k: int, cap: int) -> Verdict:
    """Check ``E_G(C(x, k+1, i)) ⊂ C(E_G x, k, i-1)`` for every ``i`` in ``k+1..cap``.

    ``x`` is read at depth ``cap``; the first counterexample ``(i, x', y)`` is
    returned as the witness.
    """
    if not 0 <= k < cap <= ts.depth:
        raise DepthError(f"need 0 <= k={k} < cap={cap} <= {ts.depth}")
    seq = ts.g_sequence
    x = truncate(seq, x, cap) if x.depth > cap else x
    if x.depth < cap:
        raise DepthError(f"continuity at cap {cap} needs a thread of depth >= {cap}")
    successors = successor_map(seq, cap)[x.last_vertex]
    image_start = frozenset(ancestor(seq, y, cap, k) for y in successors)
    x_start = frozenset([ancestor(seq, x.last_vertex, cap, k + 1)])
    for i in range(k + 1, cap + 1):
        source = _bar_levels(ts, x_start, k + 1, i)
        allowed = _bar_levels(ts, image_start, k, i - 1)
        succ = successor_map(seq, i)
        mapping = ts.bonding[i - 1].mapping
        for a in sorted(source, key=token_key):
            for b in sorted(succ[a], key=token_key):
                if mapping[b] not in allowed:
                    return Verdict.failed(
                        "continuity", (i, Thread(depth=i, last_vertex=a), Thread(depth=i, last_vertex=b)),
                        f"successor {b!r} of {a!r} leaves the fattened image at level {i - 1}",
                    )
    return Verdict.passed()


def saturation_check(ts: TwinnedSequence, x: Thread, j: int, cap: int, closed: bool = False) -> Verdict:
    """Finite-depth saturation of the truncated ``C~(x, j)``.

    With ``closed=False`` every depth-cap thread related by the raw depth-cap
    F-relation to a thread inside ``C~(x, j)`` truncated one level earlier must
    lie in ``C~(x, j)`` truncated at ``cap``. With ``closed=True`` the closure
    classes at depth ``cap`` are used instead: each class meeting ``C~(x, j)``
    must lie inside it.
    """
    if not 0 <= j <= cap <= ts.depth:
        raise DepthError(f"need 0 <= j={j} <= cap={cap} <= {ts.depth}")
    inside = nbhd_tilde(ts, x, j, cap).expand(ts, cap)
    if closed:
        partition = _partition(ts, cap)
        for members in partition.classes:
            if members & inside and not members <= inside:
                outside = min(members - inside, key=token_key)
                return Verdict.failed("saturation", Thread(depth=cap, last_vertex=outside),
                                      f"class member {outside!r} lies outside the neighbourhood")
        return Verdict.passed()
    if cap == j:
        core = frozenset([_vertex_at(ts, x, j)])
    else:
        core = nbhd_tilde(ts, x, j, cap - 1).expand(ts, cap)
    raw = successor_map(ts.f_sequence, cap)
    for z in sorted(core, key=token_key):
        for y in sorted(raw[z], key=token_key):
            if y not in inside:
                return Verdict.failed("saturation", (Thread(depth=cap, last_vertex=z), Thread(depth=cap, last_vertex=y)),
                                      f"{y!r} is F-related to {z!r} but lies outside the neighbourhood")
    return Verdict.passed()
