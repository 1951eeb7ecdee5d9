"""From a concrete system to graphs: cover refinement, twinned levels, decoding.

Twinned mode builds covers ``U_0 = {X}, U_1, ...`` satisfying C1, C2, C3 and
C5, then one tagged vertex per (parent vertex, child element) pair:

- G-edge ``a -> b`` iff ``f(U_a) ∩ U_b ≠ ∅``
- F-edge ``a ~ b`` iff ``U_a^ε ∩ U_b^ε ≠ ∅`` with the level's epsilon
- bonding: each tagged vertex goes to its parent

Zero-dimensional mode (shift backends only) uses the cylinder partitions and
the graphs ``(U_i, f^U_i)`` joined by inclusion.
"""
import logging
from functools import cached_property
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer
from sympy import Rational

from src.errors import AxiomViolation, DepthError, InvalidBackend, RefinementCapExceeded, StructuralError
from src.graph_core import Graph, GraphHom, Relation, pair_key, token_key
from src.helpers import ExactRational, Settings, load_settings
from src.limit_engine import GraphSequence, Thread, cover_successor, thread_path, truncate
from src.reports import AxiomReport
from src.systems import ShiftSystem, System, SystemSpec, system_to_dict
from src.twinned_engine import ClassAtDepth, TwinnedSequence, class_of, g_successors, quotient_at_depth, t_step

logger = logging.getLogger(__name__)

COVER_CONDITIONS = ["C1", "C2", "C3", "C5"]


class TaggedVertex(BaseModel):
    """A cover element taken as a child of one particular parent vertex."""

    model_config = ConfigDict(frozen=True)

    id: str
    level: int
    parent: Optional[str] = None
    set_id: int


class CoverLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    cover: tuple[Any, ...]
    epsilon: ExactRational


class Encoding(BaseModel):
    model_config = ConfigDict(frozen=True)

    system: SystemSpec = Field(serialization_alias="system_spec")
    mode: Literal["twinned", "zero-dim"] = "twinned"
    levels: tuple[CoverLevel, ...]
    vertex_table: tuple[tuple[TaggedVertex, ...], ...]
    twinned: Optional[TwinnedSequence] = None
    sequence: Optional[GraphSequence] = None

    @field_serializer("system")
    def _dump_system(self, system: System) -> dict:
        return system_to_dict(system)

    @field_serializer("levels")
    def _dump_levels(self, levels: tuple) -> list:
        """Cover elements in the backend's JSON form, epsilon as ``"p/q"``."""
        return [
            {"cover": [self.system.set_to_json(u) for u in level.cover], "epsilon": str(level.epsilon)}
            for level in levels
        ]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def graph_sequence(self) -> GraphSequence:
        return self.twinned.g_sequence if self.twinned is not None else self.sequence

    @cached_property
    def vertex_index(self) -> tuple[dict, ...]:
        return tuple({v.id: v for v in table} for table in self.vertex_table)

    def underlying_set(self, level: int, vertex_id: str) -> Any:
        try:
            tagged = self.vertex_index[level][vertex_id]
        except (IndexError, KeyError):
            raise StructuralError(f"no vertex {vertex_id!r} at level {level}") from None
        return self.levels[level].cover[tagged.set_id]


class OrbitStep(BaseModel):
    step: int
    thread: str
    point: str
    enclosure: str
    diameter: ExactRational
    contains_point: bool
    class_size: int = 1


# --- cover algebra ----------------------------------------------------------


def epsilon_of(system: System, cover: Any) -> Rational:
    """``max(mesh f(U), mesh U)``."""
    cover = list(cover)
    return max(system.mesh(system.image(u) for u in cover), system.mesh(cover))


def f_relation(system: System, cover: Any) -> Relation:
    """Index pairs ``(i, j)`` with ``f(U_i) ∩ U_j ≠ ∅``."""
    cover = list(cover)
    images = [system.image(u) for u in cover]
    pairs = {(i, j) for i, j in system.candidate_pairs(images, cover) if system.intersects(images[i], cover[j])}
    return Relation.on(range(len(cover)), pairs)


def _meeting_pairs(system: System, sets: list) -> set:
    return {(i, j) for i, j in system.candidate_pairs(sets, sets) if system.intersects(sets[i], sets[j])}


def _children_of(system: System, previous: CoverLevel, level: CoverLevel) -> dict:
    """Previous set index -> indices of the elements of ``level`` inside it."""
    return {
        j: [k for k, u in enumerate(level.cover) if system.subset(u, parent)]
        for j, parent in enumerate(previous.cover)
    }


def verify_level(system: System, previous: Optional[CoverLevel], level: CoverLevel, i: int) -> AxiomReport:
    """C1, C2, C3 and C5 for level ``i`` against ``previous``."""
    report = AxiomReport(subject=f"cover level {i}", depth=i)
    report.declare(COVER_CONDITIONS)
    cover = list(level.cover)

    try:
        system.check_cover(cover)
    except StructuralError as exc:
        report.fail("C1", i, None, str(exc))
        return report
    if i == 0 and not (len(cover) == 1 and system.subset(system.whole(), cover[0])):
        report.fail("C1", i, len(cover), "the level-0 cover must be {X}")
    else:
        report.passed("C1", i)

    if level.epsilon != epsilon_of(system, cover):
        report.fail("C2", i, str(level.epsilon), "stored epsilon differs from max(mesh f(U), mesh U)")
    elif previous is not None:
        fattened = [system.fatten(u, level.epsilon) for u in cover]
        for k, fat in enumerate(fattened):
            if not any(system.subset(fat, v) for v in previous.cover):
                report.fail("C2", i, k, f"fattened element {system.describe(fat)} refines no previous element")
                break
        else:
            lhs = 2 * epsilon_of(system, fattened)
            # both sides vanish only for covers by single points
            if lhs < previous.epsilon or lhs == previous.epsilon == 0:
                report.passed("C2", i)
            else:
                report.fail("C2", i, (str(lhs), str(previous.epsilon)),
                            f"2 max(mesh f(U^eps), mesh U^eps) = {lhs} is not below {previous.epsilon}")

    mesh = system.mesh(cover)
    bound = Rational(1, 2 ** i)
    if mesh <= bound:
        report.passed("C3", i)
    else:
        report.fail("C3", i, str(mesh), f"mesh {mesh} exceeds {bound}")

    if previous is not None:
        children = _children_of(system, previous, level)
        for j, parent in enumerate(previous.cover):
            members = [cover[k] for k in children[j]]
            if not members or not system.subset(parent, system.union(*members)):
                report.fail("C5", i, j, f"previous element {system.describe(parent)} is not the union of its children")
                break
        else:
            report.passed("C5", i)
    return report


def verify_conditions(system: System, levels: Any) -> AxiomReport:
    levels = list(levels)
    if not levels:
        raise StructuralError("no cover levels to verify")
    report = AxiomReport(subject="cover sequence", depth=len(levels) - 1)
    report.declare(COVER_CONDITIONS)
    for i, level in enumerate(levels):
        report.merge(verify_level(system, levels[i - 1] if i else None, level, i))
    return report


def root_level(system: System) -> CoverLevel:
    whole = system.whole()
    return CoverLevel(cover=(whole,), epsilon=epsilon_of(system, [whole]))


def refine_cover(system: System, previous: CoverLevel, i: int, settings: Optional[Settings] = None) -> CoverLevel:
    """Split every previous element, doubling the granularity until level ``i`` passes."""
    refinement = (settings or load_settings()).refinement
    granularity = refinement.initial_granularity
    report = None
    while granularity <= refinement.max_granularity:
        cover = []
        for parent in previous.cover:
            for piece in system.split(parent, granularity):
                if piece not in cover:
                    cover.append(piece)
        level = CoverLevel(cover=tuple(cover), epsilon=epsilon_of(system, cover))
        report = verify_level(system, previous, level, i)
        if report.ok:
            logger.info("level %d: %d elements at granularity %d, epsilon %s", i, len(cover), granularity, level.epsilon)
            return level
        logger.debug("level %d: granularity %d rejected (%s)", i, granularity, report.violations[0].describe())
        granularity *= 2
    raise RefinementCapExceeded(i, granularity // 2, report)


# --- graphs -----------------------------------------------------------------


def _tag_level(system: System, levels: list, i: int, parents: tuple) -> tuple:
    if i == 0:
        return (TaggedVertex(id="v0_0", level=0, set_id=0),)
    children = _children_of(system, levels[i - 1], levels[i])
    entries = [(p.id, k) for p in parents for k in children[p.set_id]]
    orphans = set(range(len(levels[i].cover))) - {k for _, k in entries}
    if orphans:
        k = min(orphans)
        raise AxiomViolation("C5", (i, k), f"level-{i} element {k} lies in no previous element")
    return tuple(TaggedVertex(id=f"v{i}_{n}", level=i, parent=p, set_id=k) for n, (p, k) in enumerate(entries))


def _level_graphs(system: System, level: CoverLevel, vertices: tuple) -> tuple[Graph, Graph]:
    copies = {}
    for v in vertices:
        copies.setdefault(v.set_id, []).append(v.id)
    g_pairs = f_relation(system, level.cover).pairs
    f_pairs = _meeting_pairs(system, [system.fatten(u, level.epsilon) for u in level.cover])

    def lift(pairs):
        return frozenset((a, b) for i, j in pairs for a in copies.get(i, ()) for b in copies.get(j, ()))

    ids = frozenset(v.id for v in vertices)
    return Graph(vertices=ids, edges=lift(g_pairs)), Graph(vertices=ids, edges=lift(f_pairs), kind="symmetric")


def _build_all(system: System, levels: list) -> tuple[list, list, list, list]:
    tables, g_levels, f_levels, bonding = [], [], [], []
    for i, level in enumerate(levels):
        vertices = _tag_level(system, levels, i, tables[-1] if tables else ())
        g, f = _level_graphs(system, level, vertices)
        if i:
            bonding.append(GraphHom(source=g, target=g_levels[-1], mapping={v.id: v.parent for v in vertices}))
        tables.append(vertices)
        g_levels.append(g)
        f_levels.append(f)
        logger.debug("level %d: %d vertices, %d G-edges, %d F-edges", i, len(vertices), len(g.edges), len(f.edges))
    return tables, g_levels, f_levels, bonding


def build_level(system: System, levels: Any, i: int) -> tuple[Graph, Graph, Optional[GraphHom]]:
    """``(G_i, F_i, phi_i)``; ``phi_0`` is ``None``."""
    levels = list(levels)
    if not 0 <= i < len(levels):
        raise DepthError(f"level {i} is outside 0..{len(levels) - 1}")
    _, g_levels, f_levels, bonding = _build_all(system, levels[: i + 1])
    return g_levels[i], f_levels[i], bonding[i - 1] if i else None


def encode(system: System, depth: int, settings: Optional[Settings] = None) -> Encoding:
    """Twinned sequence of depth ``depth`` encoding ``system``."""
    if depth < 0:
        raise DepthError("depth must be non-negative")
    levels = [root_level(system)]
    for i in range(1, depth + 1):
        levels.append(refine_cover(system, levels[-1], i, settings))
    tables, g_levels, f_levels, bonding = _build_all(system, levels)
    twinned = TwinnedSequence(g_levels=tuple(g_levels), f_levels=tuple(f_levels), bonding=tuple(bonding))
    logger.info("encoded %s system to depth %d (%d vertices at the last level)",
                system.kind, depth, len(tables[-1]))
    return Encoding(system=system, mode="twinned", levels=tuple(levels), vertex_table=tuple(tables), twinned=twinned)


def _zero_dim_levels(system: ShiftSystem, depth: int) -> list:
    levels = []
    for i in range(depth + 1):
        cover = tuple(frozenset({w}) for w in system.words(i))
        levels.append(CoverLevel(cover=cover, epsilon=epsilon_of(system, cover)))
    return levels


def _zero_dim_graphs(system: ShiftSystem, levels: list) -> tuple[list, list, list]:
    tables, graphs, bonding = [], [], []
    for i, level in enumerate(levels):
        words = [next(iter(u)) for u in level.cover]
        table = tuple(
            TaggedVertex(id=w, level=i, parent=w[:-1] if i else None, set_id=k) for k, w in enumerate(words)
        )
        edges = frozenset((words[a], words[b]) for a, b in f_relation(system, level.cover).pairs)
        graph = Graph(vertices=frozenset(words), edges=edges)
        if i:
            bonding.append(GraphHom(source=graph, target=graphs[-1], mapping={w: w[:-1] for w in words}))
        tables.append(table)
        graphs.append(graph)
    return tables, graphs, bonding


def encode_zero_dim(system: System, depth: int) -> Encoding:
    """Cylinder partitions of a shift, joined by inclusion into a sequence of graph covers."""
    if not isinstance(system, ShiftSystem):
        raise InvalidBackend(f"zero-dimensional encoding needs a shift, got {system.kind}")
    if depth < 0:
        raise DepthError("depth must be non-negative")
    for s in system.alphabet:
        if not system.predecessors[s]:
            raise InvalidBackend(f"symbol {s!r} has no predecessor; the shift is not onto")
    levels = _zero_dim_levels(system, depth)
    tables, graphs, bonding = _zero_dim_graphs(system, levels)
    sequence = GraphSequence(levels=tuple(graphs), bonding=tuple(bonding), kind="covers")
    logger.info("zero-dim encoding to depth %d: %d cylinders at the last level", depth, len(tables[-1]))
    return Encoding(system=system, mode="zero-dim", levels=tuple(levels), vertex_table=tuple(tables), sequence=sequence)


def verify_encoding_graphs(system: System, enc: Encoding) -> AxiomReport:
    """Recompute every vertex, edge and bonding value from the stored covers and compare."""
    report = AxiomReport(subject="encoding graphs", depth=enc.depth)
    report.declare(["vertex-table", "G-edges", "F-edges", "bonding"])
    levels = list(enc.levels)
    try:
        if enc.mode == "twinned":
            tables, g_levels, f_levels, bonding = _build_all(system, levels)
            stored_f = enc.twinned.f_levels
        else:
            tables, g_levels, bonding = _zero_dim_graphs(system, levels)
            f_levels, stored_f = None, None
    except AxiomViolation as exc:
        level = exc.witness[0] if isinstance(exc.witness, tuple) else None
        report.fail(exc.axiom, level, exc.witness, str(exc))
        return report
    stored_g = enc.graph_sequence
    for i in range(len(levels)):
        if i >= len(enc.vertex_table) or tables[i] != enc.vertex_table[i]:
            report.fail("vertex-table", i, None, f"vertex table of level {i} differs from the covers")
            continue
        report.passed("vertex-table", i)
        _compare_edges(report, "G-edges", i, g_levels[i].edges, stored_g.levels[i].edges)
        if f_levels is not None:
            _compare_edges(report, "F-edges", i, f_levels[i].edges, stored_f[i].edges)
        if i:
            expected, stored = bonding[i - 1].mapping, stored_g.bonding[i - 1].mapping
            if expected != stored:
                v = min((v for v in expected if expected[v] != stored.get(v)), key=token_key)
                report.fail("bonding", i, v, f"bonding value of {v!r} differs from its parent tag")
            else:
                report.passed("bonding", i)
    return report


def _compare_edges(report: AxiomReport, axiom: str, i: int, expected: frozenset, stored: frozenset) -> None:
    diff = expected ^ stored
    if not diff:
        report.passed(axiom, i)
        return
    edge = min(diff, key=pair_key)
    state = "missing" if edge in expected else "unexpected"
    report.fail(axiom, i, edge, f"{state} edge {edge!r}")


# --- decoding ---------------------------------------------------------------


def decode_psi(system: System, enc: Encoding, t: Thread) -> Any:
    """Intersection of the closures of the sets along ``t``."""
    path = thread_path(enc.graph_sequence, t)
    enclosure = system.whole()
    for i, v in enumerate(path):
        enclosure = system.intersection(enclosure, system.closure(enc.underlying_set(i, v)))
    if system.is_empty(enclosure):
        raise AxiomViolation("C5", str(t), f"closures along {t} have empty intersection")
    return enclosure


def _sample(count: int, samples: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    if samples >= count:
        return list(range(count))
    return sorted(int(k) for k in rng.choice(count, size=samples, replace=False))


def _successor_threads(enc: Encoding, x: Thread) -> list[Thread]:
    """Depth-(n-1) threads reached from ``x`` along the dynamics, in canonical order."""
    seq = enc.graph_sequence
    if enc.twinned is None:
        return [cover_successor(seq, x)]
    successors = sorted(g_successors(enc.twinned, x), key=lambda t: token_key(t.last_vertex))
    return list(dict.fromkeys(truncate(seq, y, x.depth - 1) for y in successors))


def conjugacy_check(
    system: System,
    enc: Encoding,
    depth: int,
    samples: int,
    seed: int = 0,
    max_members: Optional[int] = None,
) -> AxiomReport:
    """Compare ``f`` on enclosures with the class dynamics at ``depth``.

    For every sampled class ``c`` with image class ``T(c)``, every member
    ``x`` of ``c`` is checked (a seeded sample of ``max_members`` of them in
    larger classes):

    - ``f(psi(x))`` meets ``psi(y)`` for each G-successor ``y`` of ``x`` cut to depth - 1
    - ``f(psi(x))`` lies inside ``B``, the union of the enclosures of ``T(c)``
    - ``diam psi(x) <= 2^-depth``; members of ``T(c)`` stay within ``2^-(depth-1)``

    When every member of ``c`` and of ``T(c)`` decodes to a single point,
    ``f`` of the enclosure of ``c`` must equal ``B`` exactly.
    """
    if not 1 <= depth <= enc.depth:
        raise DepthError(f"conjugacy is checked at depths 1..{enc.depth}, got {depth}")
    limit = load_settings().checks.max_members if max_members is None else max_members
    report = AxiomReport(subject=f"conjugacy at depth {depth} (seed {seed})", depth=depth)
    report.declare(["image-meets", "image-enclosed", "diameter", "exact-image"])
    rng = np.random.default_rng(seed)
    seq = enc.graph_sequence
    if enc.mode == "twinned":
        classes = list(quotient_at_depth(enc.twinned, depth))
    else:
        classes = [
            ClassAtDepth(depth=depth, members=frozenset({Thread(depth=depth, last_vertex=v)}))
            for v in seq.levels[depth].sorted_vertices()
        ]
    enclosures: dict[Thread, Any] = {}

    def psi(t: Thread) -> Any:
        if t not in enclosures:
            enclosures[t] = decode_psi(system, enc, t)
        return enclosures[t]

    for k in _sample(len(classes), samples, seed):
        c = classes[k]
        members = c.sorted_members()
        if enc.mode == "twinned":
            image = t_step(enc.twinned, c).sorted_members()
        else:
            image = [cover_successor(seq, members[0])]
        checked = members
        if len(members) > limit:
            checked = [members[int(i)] for i in sorted(rng.choice(len(members), size=limit, replace=False))]
        union_b = system.union(*(psi(t) for t in image))

        widest = max(system.diam(psi(t)) for t in image)
        if widest > Rational(1, 2 ** (depth - 1)):
            report.fail("diameter", depth, str(c.representative()), f"image class enclosure has diameter {widest}")
        for x in checked:
            fa = system.image(psi(x))
            missed = [t for t in _successor_threads(enc, x) if not system.intersects(fa, psi(t))]
            if missed:
                report.fail("image-meets", depth, (str(x), str(missed[0])), f"f(psi({x})) misses psi({missed[0]})")
            else:
                report.passed("image-meets", depth)
            if system.subset(fa, union_b):
                report.passed("image-enclosed", depth)
            else:
                report.fail("image-enclosed", depth, str(x),
                            f"f(psi({x})) = {system.describe(fa)} leaves {system.describe(union_b)}")
            if system.diam(psi(x)) <= Rational(1, 2 ** depth):
                report.passed("diameter", depth)
            else:
                report.fail("diameter", depth, str(x), f"enclosure of {x} has diameter {system.diam(psi(x))}")

        if len(checked) == len(members) and all(system.diam(psi(t)) == 0 for t in members + image):
            fa = system.image(system.union(*(psi(t) for t in members)))
            if system.subset(fa, union_b) and system.subset(union_b, fa):
                report.passed("exact-image", depth)
            else:
                report.fail("exact-image", depth, str(c.representative()),
                            f"f maps the class to {system.describe(fa)} but its image decodes to "
                            f"{system.describe(union_b)}")
    return report


def _thread_containing(system: System, enc: Encoding, point: Any, depth: int) -> Thread:
    seq = enc.graph_sequence
    current = None
    for i in range(depth + 1):
        if i == 0:
            options = seq.levels[0].sorted_vertices()
        else:
            options = sorted(seq.bonding[i - 1].preimages[current], key=token_key)
        inside = [v for v in options if system.contains(enc.underlying_set(i, v), point)]
        if not inside:
            raise StructuralError(f"{system.format_point(point)} lies in no level-{i} set under {current!r}")
        current = inside[0]
    return Thread(depth=depth, last_vertex=current)


def track_orbit(system: System, enc: Encoding, point: Any, steps: int) -> list[OrbitStep]:
    """Follow the true orbit of ``point`` through threads of decreasing depth.

    At step ``s`` the thread has depth ``depth - s`` and contains ``f^s(point)``
    at every level; its successor is a G-successor, so the class trajectory is
    the one produced by the class dynamics.
    """
    if not 0 <= steps <= enc.depth:
        raise DepthError(f"{steps} steps need a depth of at least {steps}, bundle has {enc.depth}")
    out = []
    x = _thread_containing(system, enc, point, enc.depth)
    for s in range(steps + 1):
        enclosure = decode_psi(system, enc, x)
        size = len(class_of(enc.twinned, x).members) if enc.twinned is not None else 1
        out.append(OrbitStep(
            step=s,
            thread=str(x),
            point=system.format_point(point),
            enclosure=system.describe(enclosure),
            diameter=system.diam(enclosure),
            contains_point=system.contains(enclosure, point),
            class_size=size,
        ))
        if s == steps:
            break
        point = system.apply(point)
        y = _thread_containing(system, enc, point, x.depth)
        x = truncate(enc.graph_sequence, y, x.depth - 1)
    return out


class LevelSummary(BaseModel):
    level: int
    vertices: int
    g_edges: int
    f_edges: Optional[int] = None
    epsilon: ExactRational
    mesh: ExactRational
    lebesgue: ExactRational
    classes: Optional[int] = None


def level_summaries(system: System, enc: Encoding) -> list[LevelSummary]:
    """Per-level counts, epsilon, mesh and certified Lebesgue bound."""
    out = []
    seq = enc.graph_sequence
    for i, level in enumerate(enc.levels):
        out.append(LevelSummary(
            level=i,
            vertices=len(seq.levels[i].vertices),
            g_edges=len(seq.levels[i].edges),
            f_edges=len(enc.twinned.f_levels[i].edges) if enc.twinned is not None else None,
            epsilon=level.epsilon,
            mesh=system.mesh(level.cover),
            lebesgue=system.lebesgue_lower_bound(list(level.cover)),
            classes=len(quotient_at_depth(enc.twinned, i)) if enc.twinned is not None else None,
        ))
    return out
