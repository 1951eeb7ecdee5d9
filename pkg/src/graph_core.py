"""Finite graphs, graph homomorphisms and binary relations.

Vertices are opaque hashable tokens scoped to one graph; the only link between
vertices of different graphs is a :class:`GraphHom`. Symmetric graphs store
both ordered pairs of every edge so that their edge sets can be reused as
:class:`Relation` pairs directly.

Validators return a :class:`Verdict` carrying the first witness found instead
of a bare boolean; a verdict is truthy exactly when the property holds.
"""
from collections import defaultdict
from functools import cached_property
from typing import Any, Hashable, Iterable, Literal, Optional

from frozendict import frozendict
from networkx.utils import UnionFind
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from src.errors import AxiomViolation, StructuralError

Vertex = Hashable


def token_key(token: Any) -> tuple:
    """Deterministic sort key for opaque vertex tokens of mixed types."""
    return (type(token).__name__, str(token))


def pair_key(pair: tuple) -> tuple:
    return (token_key(pair[0]), token_key(pair[1]))


class Verdict(BaseModel):
    """Outcome of a validator: truthy iff ``ok``; failures carry a witness."""

    model_config = ConfigDict(frozen=True)

    ok: bool
    code: Optional[str] = None
    witness: Optional[Any] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls) -> "Verdict":
        return cls(ok=True)

    @classmethod
    def failed(cls, code: str, witness: Any, message: str = "") -> "Verdict":
        return cls(ok=False, code=code, witness=witness, message=message or code)


class Graph(BaseModel):
    model_config = ConfigDict(frozen=True)

    vertices: frozenset[Hashable]
    edges: frozenset[tuple[Hashable, Hashable]] = frozenset()
    kind: Literal["directed", "symmetric"] = "directed"

    @model_validator(mode="after")
    def _check_edges(self) -> "Graph":
        for u, v in self.edges:
            if u not in self.vertices or v not in self.vertices:
                raise StructuralError(f"edge {(u, v)!r} has an endpoint outside the vertex set")
        if self.kind == "symmetric":
            for u, v in self.edges:
                if (v, u) not in self.edges:
                    raise StructuralError(f"symmetric graph lacks the reverse of edge {(u, v)!r}")
        return self

    @field_serializer("vertices")
    def _dump_vertices(self, vertices: frozenset) -> list:
        return sorted(vertices, key=token_key)

    @field_serializer("edges")
    def _dump_edges(self, edges: frozenset) -> list:
        return [list(e) for e in sorted(edges, key=pair_key)]

    @cached_property
    def out_map(self) -> dict:
        out = {v: set() for v in self.vertices}
        for u, v in self.edges:
            out[u].add(v)
        return {v: frozenset(targets) for v, targets in out.items()}

    @cached_property
    def in_map(self) -> dict:
        inc = {v: set() for v in self.vertices}
        for u, v in self.edges:
            inc[v].add(u)
        return {v: frozenset(sources) for v, sources in inc.items()}

    def out_neighbors(self, v: Vertex) -> frozenset:
        if v not in self.vertices:
            raise StructuralError(f"{v!r} is not a vertex of this graph")
        return self.out_map[v]

    def in_neighbors(self, v: Vertex) -> frozenset:
        if v not in self.vertices:
            raise StructuralError(f"{v!r} is not a vertex of this graph")
        return self.in_map[v]

    def sorted_vertices(self) -> list:
        return sorted(self.vertices, key=token_key)

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=pair_key)


class GraphHom(BaseModel):
    """A total vertex map ``source -> target``; edges are not required to map to edges."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: Graph
    target: Graph
    mapping: frozendict = Field(serialization_alias="map")

    @field_validator("mapping", mode="before")
    @classmethod
    def _freeze(cls, value: Any) -> frozendict:
        return value if isinstance(value, frozendict) else frozendict(value)

    @model_validator(mode="after")
    def _check_total(self) -> "GraphHom":
        for u, v in self.mapping.items():
            if u not in self.source.vertices:
                raise StructuralError(f"mapped vertex {u!r} is outside the source vertex set")
            if v not in self.target.vertices:
                raise StructuralError(f"image {v!r} of {u!r} is outside the target vertex set")
        missing = self.source.vertices - self.mapping.keys()
        if missing:
            first = min(missing, key=token_key)
            raise StructuralError(f"mapping is not defined on source vertex {first!r}")
        return self

    @field_serializer("mapping")
    def _dump_mapping(self, mapping: frozendict) -> dict:
        return {str(k): mapping[k] for k in sorted(mapping, key=token_key)}

    def __call__(self, v: Vertex) -> Vertex:
        try:
            return self.mapping[v]
        except KeyError:
            raise StructuralError(f"{v!r} is not a source vertex") from None

    @cached_property
    def preimages(self) -> dict:
        pre = {v: set() for v in self.target.vertices}
        for u, v in self.mapping.items():
            pre[v].add(u)
        return {v: frozenset(us) for v, us in pre.items()}

    def edge_image(self) -> frozenset:
        return frozenset((self.mapping[u], self.mapping[v]) for u, v in self.source.edges)

    def rebase(self, source: Graph, target: Graph) -> "GraphHom":
        """Same vertex map between another pair of graphs on the same vertex sets."""
        return GraphHom(source=source, target=target, mapping=self.mapping)


class Relation(BaseModel):
    model_config = ConfigDict(frozen=True)

    left_domain: frozenset[Hashable]
    right_domain: frozenset[Hashable]
    pairs: frozenset[tuple[Hashable, Hashable]] = frozenset()

    @model_validator(mode="after")
    def _check_pairs(self) -> "Relation":
        for v, w in self.pairs:
            if v not in self.left_domain or w not in self.right_domain:
                raise StructuralError(f"pair {(v, w)!r} lies outside left-domain x right-domain")
        return self

    @classmethod
    def on(cls, domain: Iterable, pairs: Iterable = ()) -> "Relation":
        domain = frozenset(domain)
        return cls(left_domain=domain, right_domain=domain, pairs=frozenset(pairs))

    @classmethod
    def identity(cls, domain: Iterable) -> "Relation":
        domain = frozenset(domain)
        return cls.on(domain, ((v, v) for v in domain))

    @cached_property
    def image_map(self) -> dict:
        images = defaultdict(set)
        for v, w in self.pairs:
            images[v].add(w)
        return {v: frozenset(ws) for v, ws in images.items()}

    def __contains__(self, pair: tuple) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


class Partition(BaseModel):
    """Classes of an equivalence relation; ``class_of`` realizes the projection onto classes."""

    model_config = ConfigDict(frozen=True)

    domain: frozenset[Hashable]
    classes: tuple[frozenset[Hashable], ...]

    @cached_property
    def _index(self) -> dict:
        return {v: k for k, members in enumerate(self.classes) for v in members}

    def index_of(self, v: Vertex) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise StructuralError(f"{v!r} is outside the partitioned set") from None

    def class_of(self, v: Vertex) -> frozenset:
        return self.classes[self.index_of(v)]

    def __len__(self) -> int:
        return len(self.classes)


def dump_bonding(bonding: Iterable[GraphHom]) -> list:
    """Bonding maps as ``{"map": {u: v}}``; their graphs are written with the levels."""
    return [phi.model_dump(mode="json", include={"mapping"}, by_alias=True) for phi in bonding]


def identity_hom(graph: Graph) -> GraphHom:
    return GraphHom(source=graph, target=graph, mapping={v: v for v in graph.vertices})


def compose_homs(psi: GraphHom, phi: GraphHom) -> GraphHom:
    """``psi ∘ phi`` for ``phi: G1 -> G2`` and ``psi: G2 -> G3``."""
    if phi.target.vertices != psi.source.vertices:
        raise StructuralError("cannot compose: target of the inner map differs from source of the outer map")
    return GraphHom(
        source=phi.source,
        target=psi.target,
        mapping={v: psi.mapping[w] for v, w in phi.mapping.items()},
    )


def relation_from_hom(phi: GraphHom) -> Relation:
    return Relation(
        left_domain=phi.source.vertices,
        right_domain=phi.target.vertices,
        pairs=frozenset(phi.mapping.items()),
    )


def is_homomorphism(phi: GraphHom) -> Verdict:
    target_edges = phi.target.edges
    for u, v in phi.source.sorted_edges():
        if (phi.mapping[u], phi.mapping[v]) not in target_edges:
            return Verdict.failed(
                "not-homomorphism", (u, v),
                f"edge {(u, v)!r} maps to non-edge {(phi.mapping[u], phi.mapping[v])!r}",
            )
    return Verdict.passed()


def is_edge_surjective_graph(graph: Graph) -> Verdict:
    for v in graph.sorted_vertices():
        if not graph.in_neighbors(v):
            return Verdict.failed("no-in-edge", v, f"vertex {v!r} has no incoming edge")
        if not graph.out_neighbors(v):
            return Verdict.failed("no-out-edge", v, f"vertex {v!r} has no outgoing edge")
    return Verdict.passed()


def _require_homomorphism(phi: GraphHom) -> None:
    verdict = is_homomorphism(phi)
    if not verdict:
        raise AxiomViolation("homomorphism", verdict.witness, verdict.message)


def is_edge_surjective_hom(phi: GraphHom) -> Verdict:
    """True iff the edge image of ``phi`` is the whole target edge set.

    Raises :class:`AxiomViolation` when ``phi`` is not a homomorphism.
    """
    _require_homomorphism(phi)
    missed = phi.target.edges - phi.edge_image()
    if missed:
        edge = min(missed, key=pair_key)
        return Verdict.failed("not-edge-surjective", edge, f"target edge {edge!r} is never hit")
    return Verdict.passed()


def is_plus_directional(phi: GraphHom) -> Verdict:
    """True iff all out-neighbours of every source vertex share one image."""
    _require_homomorphism(phi)
    for u in phi.source.sorted_vertices():
        images = {}
        for v in sorted(phi.source.out_map[u], key=token_key):
            image = phi.mapping[v]
            if images and image not in images:
                w = next(iter(images.values()))
                return Verdict.failed(
                    "not-plus-directional", (u, w, v),
                    f"out-neighbours {w!r} and {v!r} of {u!r} have different images",
                )
            images[image] = v
    return Verdict.passed()


def is_graph_cover(phi: GraphHom) -> Verdict:
    """Edge-surjective graphs joined by a +directional edge-surjective homomorphism."""
    verdict = is_edge_surjective_graph(phi.source)
    if not verdict:
        return Verdict.failed("source-not-edge-surjective", verdict.witness, verdict.message)
    verdict = is_edge_surjective_graph(phi.target)
    if not verdict:
        return Verdict.failed("target-not-edge-surjective", verdict.witness, verdict.message)
    verdict = is_homomorphism(phi)
    if not verdict:
        return verdict
    verdict = is_plus_directional(phi)
    if not verdict:
        return verdict
    return is_edge_surjective_hom(phi)


def compose_relations(q: Relation, r: Relation) -> Relation:
    """The composition ``QR = {(v, u) : (v, w) in R and (w, u) in Q for some w}``."""
    if r.right_domain != q.left_domain:
        raise StructuralError("cannot compose: right-domain of R differs from left-domain of Q")
    q_images = q.image_map
    pairs = {(v, u) for v, w in r.pairs for u in q_images.get(w, ())}
    return Relation(left_domain=r.left_domain, right_domain=q.right_domain, pairs=frozenset(pairs))


def relation_image(r: Relation, v: Vertex) -> frozenset:
    if v not in r.left_domain:
        raise StructuralError(f"{v!r} is outside the left-domain")
    return r.image_map.get(v, frozenset())


def equivalence_closure(r: Relation) -> Partition:
    """Partition induced by the reflexive, symmetric and transitive closure of ``r``."""
    if r.left_domain != r.right_domain:
        raise StructuralError("equivalence closure needs a relation on a single set")
    forest = UnionFind(r.left_domain)
    for v, w in r.pairs:
        forest.union(v, w)
    classes = [frozenset(members) for members in forest.to_sets()]
    classes.sort(key=lambda members: min(token_key(v) for v in members))
    return Partition(domain=r.left_domain, classes=tuple(classes))
