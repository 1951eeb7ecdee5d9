"""Graphs, homomorphisms, relations and their validators."""
import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from conftest import cover_sequences, graph, hom
from src.errors import AxiomViolation, StructuralError
from src.graph_core import (
    Graph,
    Relation,
    compose_homs,
    compose_relations,
    equivalence_closure,
    identity_hom,
    is_edge_surjective_graph,
    is_edge_surjective_hom,
    is_graph_cover,
    is_homomorphism,
    is_plus_directional,
    relation_from_hom,
    relation_image,
)


def test_edge_outside_vertex_set_is_rejected():
    with pytest.raises(StructuralError):
        graph(["a"], [("a", "b")])


def test_symmetric_graph_needs_reverse_edges():
    with pytest.raises(StructuralError):
        Graph(vertices=frozenset("ab"), edges=frozenset({("a", "b")}), kind="symmetric")


def test_partial_map_is_rejected():
    g = graph(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(StructuralError):
        hom(g, g, {"a": "a"})


def test_homomorphism_witness_is_first_bad_edge():
    src = graph(["a", "b"], [("a", "b"), ("b", "a")])
    tgt = graph(["x", "y"], [("x", "y"), ("y", "y")])
    verdict = is_homomorphism(hom(src, tgt, {"a": "y", "b": "x"}))
    assert not verdict
    assert verdict.witness == ("a", "b")


def test_two_cycle_onto_loop_is_a_cover():
    src = graph(["a", "b"], [("a", "b"), ("b", "a")])
    tgt = graph(["x"], [("x", "x")])
    assert is_graph_cover(hom(src, tgt, {"a": "x", "b": "x"}))


def test_edge_surjectivity_of_graphs():
    assert not is_edge_surjective_graph(graph(["a", "b"], [("a", "b"), ("b", "b")]))
    assert is_edge_surjective_graph(graph(["a"], [("a", "a")]))
    verdict = is_edge_surjective_graph(graph(["a", "b"], [("a", "a"), ("b", "a")]))
    assert verdict.code == "no-in-edge" and verdict.witness == "b"


def test_plus_directional_failure_names_both_neighbours():
    src = graph(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "a"), ("c", "a")])
    tgt = graph(["x", "y", "z"], [("x", "y"), ("x", "z"), ("y", "x"), ("z", "x")])
    verdict = is_plus_directional(hom(src, tgt, {"a": "x", "b": "y", "c": "z"}))
    assert not verdict
    assert verdict.witness == ("a", "b", "c")


def test_plus_directional_requires_homomorphism():
    src = graph(["a"], [("a", "a")])
    tgt = graph(["x", "y"], [("x", "y"), ("y", "x")])
    with pytest.raises(AxiomViolation):
        is_plus_directional(hom(src, tgt, {"a": "x"}))
    with pytest.raises(AxiomViolation):
        is_edge_surjective_hom(hom(src, tgt, {"a": "x"}))


def test_missed_target_edge():
    src = graph(["a"], [("a", "a")])
    tgt = graph(["x"], [("x", "x")])
    assert is_edge_surjective_hom(hom(src, tgt, {"a": "x"}))
    tgt2 = graph(["x", "y"], [("x", "x"), ("x", "y"), ("y", "x")])
    verdict = is_edge_surjective_hom(hom(src, tgt2, {"a": "x"}))
    assert verdict.witness == ("x", "y")


def test_compose_relations_order():
    r = Relation(left_domain=frozenset("ab"), right_domain=frozenset("xy"), pairs=frozenset({("a", "x"), ("b", "y")}))
    q = Relation(left_domain=frozenset("xy"), right_domain=frozenset("uv"), pairs=frozenset({("x", "u")}))
    assert compose_relations(q, r).pairs == {("a", "u")}
    with pytest.raises(StructuralError):
        compose_relations(r, r)


def test_relation_image_outside_domain():
    r = Relation.on("ab", [("a", "b")])
    assert relation_image(r, "a") == {"b"}
    assert relation_image(r, "b") == frozenset()
    with pytest.raises(StructuralError):
        relation_image(r, "z")


def test_equivalence_closure_examples():
    assert len(equivalence_closure(Relation.on("abc", [("a", "b"), ("b", "c")]))) == 1
    assert len(equivalence_closure(Relation.on("abc"))) == 3
    assert equivalence_closure(Relation.identity("ab")).classes == (frozenset("a"), frozenset("b"))


def test_identity_and_graph_of_a_map():
    g = graph(["a", "b"], [("a", "b"), ("b", "a")])
    ident = identity_hom(g)
    assert is_graph_cover(ident)
    assert compose_homs(ident, ident).mapping == ident.mapping
    assert relation_from_hom(ident).pairs == {("a", "a"), ("b", "b")}


relations = st.sets(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=12)


@settings(max_examples=100)
@given(pairs=relations)
def test_closure_classes_partition_and_absorb_pairs(pairs):
    partition = equivalence_closure(Relation.on(range(8), pairs))
    members = [v for c in partition.classes for v in c]
    assert sorted(members) == list(range(8))
    for v, w in pairs:
        assert partition.index_of(v) == partition.index_of(w)


@settings(max_examples=100, deadline=None)
@given(seq=cover_sequences(max_vertices=24, max_depth=2, max_copies=1))
def test_composition_of_covers_is_a_cover(seq):
    assert seq.depth == 2
    assert is_graph_cover(compose_homs(seq.bonding[0], seq.bonding[1]))


def _relation(pairs):
    return Relation(left_domain=frozenset(range(5)), right_domain=frozenset(range(5)), pairs=frozenset(pairs))


def _matrix(r):
    m = np.zeros((5, 5), dtype=int)
    for v, w in r.pairs:
        m[v, w] = 1
    return m


small_relations = st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=10)


@settings(max_examples=100)
@given(q_pairs=small_relations, r_pairs=small_relations)
def test_composition_matches_boolean_matrix_product(q_pairs, r_pairs):
    q, r = _relation(q_pairs), _relation(r_pairs)
    product = (_matrix(r) @ _matrix(q)) > 0
    expected = {(int(v), int(u)) for v, u in zip(*np.nonzero(product))}
    composed = compose_relations(q, r)
    assert composed.pairs == expected
    for v in range(5):
        via = frozenset().union(*(relation_image(q, w) for w in relation_image(r, v)))
        assert relation_image(composed, v) == via
