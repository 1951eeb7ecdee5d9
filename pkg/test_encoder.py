"""Cover refinement, the twinned and zero-dimensional encoders, decoding and orbits."""
from itertools import product

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings
from sympy import Interval, Rational

from src.errors import DepthError, InvalidBackend, RefinementCapExceeded
from src.graph_core import Graph, is_edge_surjective_hom, is_graph_cover
from src.helpers import RefinementSettings, Settings
from src.limit_engine import Thread, cover_successor, enumerate_threads, truncate, validate_sequence
from src.systems import FiniteSystem, ShiftSystem, load_system
from src.encoder import (
    CoverLevel,
    build_level,
    conjugacy_check,
    decode_psi,
    encode,
    encode_zero_dim,
    epsilon_of,
    f_relation,
    level_summaries,
    root_level,
    track_orbit,
    verify_conditions,
    verify_encoding_graphs,
)
from src.twinned_engine import (
    TwinnedSequence,
    class_of,
    continuity_check,
    ds3b_projection_check,
    f_relation_at_depth,
    quotient_at_depth,
    saturation_check,
    t_step,
    truncate_class,
    validate_twinned,
)
from conftest import SYSTEMS

R = Rational
TENT_HALVES = (Interval(0, R(3, 5), False, True), Interval(R(2, 5), 1, True, False))


@pytest.fixture(scope="module")
def tent_encoding():
    tent = load_system(SYSTEMS / 'tent.yaml')
    return tent, encode(tent, 1)


# 1. the relation f^U and the cover conditions


def test_f_relation_examples(tent, full_shift):
    assert f_relation(tent, [tent.whole()]).pairs == {(0, 0)}
    assert len(f_relation(tent, TENT_HALVES).pairs) == 4
    words = sorted(full_shift.words(2))
    relation = f_relation(full_shift, [frozenset({w}) for w in words])
    # De Bruijn graph on two-letter words
    assert relation.pairs == {(i, j) for i, a in enumerate(words) for j, b in enumerate(words) if a[1] == b[0]}


def test_coarse_tent_cover_fails_the_mesh_bound(tent):
    level = CoverLevel(cover=TENT_HALVES, epsilon=epsilon_of(tent, TENT_HALVES))
    report = verify_conditions(tent, [root_level(tent), level])
    assert [v.witness for v in report.failures("C3")] == ["3/5"]
    assert report.failures("C2")
    assert not report.failures("C1") and not report.failures("C5")


def test_stored_epsilon_must_match(swap):
    root = root_level(swap)
    assert verify_conditions(swap, [root]).ok
    forged = root.model_copy(update={"epsilon": R(1, 3)})
    assert verify_conditions(swap, [forged]).failures("C2")


def test_refinement_cap(full_shift):
    capped = Settings(refinement=RefinementSettings(max_granularity=4))
    with pytest.raises(RefinementCapExceeded) as info:
        encode(full_shift, 1, capped)
    assert info.value.level == 1 and info.value.granularity == 4
    assert info.value.report.violations[0].axiom == "C2"


# 2. twinned encodings


def test_swap_encoding(swap):
    enc = encode(swap, 3)
    assert validate_twinned(enc.twinned).ok
    assert verify_conditions(swap, enc.levels).ok
    assert [len(t) for t in enc.vertex_table] == [1, 2, 2, 2]
    classes = quotient_at_depth(enc.twinned, 3)
    assert len(classes) == 2
    relation = f_relation_at_depth(enc.twinned, 3)
    assert all(a == b for a, b in relation.pairs)
    p = Thread(depth=3, last_vertex="v3_0")
    assert decode_psi(swap, enc, p) == {"p"}
    image = t_step(enc.twinned, class_of(enc.twinned, p))
    assert image.vertices() == {"v2_1"}
    assert decode_psi(swap, enc, Thread(depth=2, last_vertex="v2_1")) == {"q"}


def test_fixed_point_encoding(fixed_point):
    enc = encode(fixed_point, 3)
    assert validate_twinned(enc.twinned).ok
    assert all(len(g.vertices) == 1 and len(g.edges) == 1 for g in enc.twinned.g_levels)
    assert conjugacy_check(fixed_point, enc, 3, samples=5).ok


def test_full_shift_cylinders_lengthen(full_shift):
    enc = encode(full_shift, 2)
    assert [sorted(len(next(iter(u))) for u in level.cover)[0] for level in enc.levels[1:]] == [3, 5]
    assert validate_twinned(enc.twinned).ok
    assert verify_conditions(full_shift, enc.levels).ok
    assert conjugacy_check(full_shift, enc, 2, samples=8, seed=3).ok


def test_tent_encoding_is_twinned(tent_encoding):
    tent, enc = tent_encoding
    assert validate_twinned(enc.twinned).ok
    assert verify_conditions(tent, enc.levels).ok
    for phi in enc.twinned.bonding:
        assert is_edge_surjective_hom(phi)
    assert verify_encoding_graphs(tent, enc).ok
    assert conjugacy_check(tent, enc, 1, samples=10, seed=7).ok


def test_build_level_matches_encode(tent_encoding):
    tent, enc = tent_encoding
    g, f, phi = build_level(tent, enc.levels, 1)
    assert g == enc.twinned.g_levels[1] and f == enc.twinned.f_levels[1]
    assert phi.mapping == enc.twinned.bonding[0].mapping
    g0, _, phi0 = build_level(tent, enc.levels, 0)
    assert phi0 is None and g0.vertices == {"v0_0"}
    with pytest.raises(DepthError):
        build_level(tent, enc.levels, 2)


def test_tampered_vertex_table_is_detected(swap):
    enc = encode(swap, 2)
    table = list(enc.vertex_table)
    table[2] = tuple(v.model_copy(update={"set_id": 1 - v.set_id}) for v in table[2])
    report = verify_encoding_graphs(swap, enc.model_copy(update={"vertex_table": tuple(table)}))
    assert [v.level for v in report.failures("vertex-table")] == [2]


def test_level_summaries(swap):
    rows = level_summaries(swap, encode(swap, 2))
    assert [r.vertices for r in rows] == [1, 2, 2]
    assert [r.classes for r in rows] == [1, 2, 2]
    assert rows[0].epsilon == 1 and rows[1].epsilon == 0


# 3. orbits


def test_tent_orbit_stays_inside_enclosures(tent):
    enc = encode(tent, 2)
    steps = track_orbit(tent, enc, tent.parse_point("2/5"), 2)
    assert [s.point for s in steps] == ["2/5", "4/5", "2/5"]
    assert all(s.contains_point for s in steps)
    assert [s.class_size >= 1 for s in steps] == [True, True, True]
    assert steps[0].diameter <= R(1, 4)
    with pytest.raises(DepthError):
        track_orbit(tent, enc, R(2, 5), 3)


def test_shift_orbit(full_shift):
    enc = encode_zero_dim(full_shift, 4)
    steps = track_orbit(full_shift, enc, full_shift.parse_point("(011)"), 3)
    assert [s.enclosure for s in steps] == ["C(0110)", "C(110)", "C(10)", "C(0)"]
    assert [s.point for s in steps] == ["(011)", "(110)", "(101)", "(011)"]


# 4. zero-dimensional encodings


def test_full_shift_counts(full_shift):
    enc = encode_zero_dim(full_shift, 5)
    for i, g in enumerate(enc.sequence.levels):
        assert len(g.vertices) == 2 ** i
        assert len(g.edges) == 2 ** (i + 1)
    assert len(enumerate_threads(enc.sequence, 3)) == 8
    assert validate_sequence(enc.sequence).ok
    assert decode_psi(full_shift, enc, Thread(depth=3, last_vertex="010")) == {"010"}


def test_golden_mean_counts_and_successor(golden_mean):
    enc = encode_zero_dim(golden_mean, 6)
    assert [len(g.vertices) for g in enc.sequence.levels[1:5]] == [2, 3, 5, 8]
    for phi in enc.sequence.bonding:
        assert is_graph_cover(phi)
    for w in enc.sequence.levels[6].vertices:
        assert cover_successor(enc.sequence, Thread(depth=6, last_vertex=w)) == Thread(depth=5, last_vertex=w[1:])
    assert verify_encoding_graphs(golden_mean, enc).ok
    assert conjugacy_check(golden_mean, enc, 6, samples=10, seed=1).ok


def test_zero_dim_needs_an_onto_shift(swap):
    with pytest.raises(InvalidBackend):
        encode_zero_dim(swap, 2)
    # 1 -> 0 only, and nothing enters 1
    not_onto = ShiftSystem(alphabet=("0", "1"), transitions=frozenset({"00", "10"}))
    with pytest.raises(InvalidBackend):
        encode_zero_dim(not_onto, 2)


def test_depth_guards(swap, full_shift):
    with pytest.raises(DepthError):
        encode(swap, -1)
    enc = encode(swap, 1)
    with pytest.raises(DepthError):
        conjugacy_check(swap, enc, 2, samples=1)
    with pytest.raises(DepthError):
        conjugacy_check(swap, enc, 0, samples=1)


def test_orphan_cover_element_is_reported(swap):
    enc = encode(swap, 2)
    levels = list(enc.levels)
    levels[1] = levels[1].model_copy(update={"cover": (frozenset({"p"}), frozenset({"p"}))})
    report = verify_encoding_graphs(swap, enc.model_copy(update={"levels": tuple(levels)}))
    assert [(v.level, v.witness) for v in report.failures("C5")] == [(2, (2, 1))]


# 5. conjugacy and the neighbourhood properties on encoder outputs


def _by_point(enc, i):
    return {next(iter(enc.underlying_set(i, v.id))): v.id for v in enc.vertex_table[i]}


def test_every_class_member_is_checked():
    system = FiniteSystem(points=("a", "b", "c"), map={"a": "a", "b": "c", "c": "c"})
    enc = encode(system, 2)
    assert conjugacy_check(system, enc, 2, samples=3).ok
    ts = enc.twinned
    ids = {i: _by_point(enc, i) for i in (1, 2)}
    g_levels, f_levels = list(ts.g_levels), list(ts.f_levels)
    for i in (1, 2):
        a, b, c = ids[i]["a"], ids[i]["b"], ids[i]["c"]
        g_levels[i] = Graph(vertices=g_levels[i].vertices, edges=(g_levels[i].edges - {(b, c)}) | {(b, a)})
        f_levels[i] = Graph(vertices=f_levels[i].vertices, edges=f_levels[i].edges | {(a, b), (b, a)},
                            kind="symmetric")
    # {a, b} becomes one class at depth 2 whose smallest member a is consistent and b is not
    merged = TwinnedSequence(g_levels=tuple(g_levels), f_levels=tuple(f_levels), bonding=ts.bonding)
    tampered = enc.model_copy(update={"twinned": merged})
    a2, b2 = ids[2]["a"], ids[2]["b"]
    assert class_of(merged, Thread(depth=2, last_vertex=b2)).representative().last_vertex == a2

    report = conjugacy_check(system, tampered, 2, samples=2)
    assert [v.witness for v in report.failures("image-meets")] == [(f"{b2}@2", f"{ids[1]['a']}@1")]
    assert [v.witness for v in report.failures("image-enclosed")] == [f"{b2}@2"]
    assert [v.witness for v in report.failures("exact-image")] == [f"{a2}@2"]

    capped = conjugacy_check(system, tampered, 2, samples=2, max_members=1)
    assert not capped.failures("exact-image")


def _assert_recovers_the_map(images):
    points = tuple(f"x{k}" for k in range(len(images)))
    system = FiniteSystem(points=points, map={p: points[k] for p, k in zip(points, images)})
    enc = encode(system, 2)
    assert validate_twinned(enc.twinned).ok
    classes = quotient_at_depth(enc.twinned, 2)
    assert len(classes) == len(points)
    for c in classes:
        (point,) = decode_psi(system, enc, c.representative())
        image = t_step(enc.twinned, c)
        assert decode_psi(system, enc, image.representative()) == {system.map[point]}
    assert conjugacy_check(system, enc, 2, samples=len(points)).ok


@pytest.mark.parametrize("images", [m for n in (1, 2, 3) for m in product(range(n), repeat=n)])
def test_small_finite_maps_are_recovered_exactly(images):
    _assert_recovers_the_map(images)


@settings(max_examples=50, deadline=None)
@given(images=st.integers(4, 6).flatmap(lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n)))
def test_sampled_finite_maps_are_recovered_exactly(images):
    _assert_recovers_the_map(images)


ENCODED = [("swap.yaml", 5), ("fixed_point.yaml", 5), ("three_points.yaml", 5), ("full_shift.yaml", 2)]


@pytest.mark.parametrize("name, depth", ENCODED)
def test_neighbourhood_properties_hold_up_to_the_cap(name, depth):
    ts = encode(load_system(SYSTEMS / name), depth).twinned
    closed = len(quotient_at_depth(ts, depth)) > 1
    for x in enumerate_threads(ts.g_sequence, depth):
        for k in range(depth):
            assert continuity_check(ts, x, k, depth)
        for j in range(depth + 1):
            assert saturation_check(ts, x, j, depth)
            assert saturation_check(ts, x, j, depth, closed=closed)
    for n in range(1, depth + 1):
        assert ds3b_projection_check(ts, n)


@pytest.mark.parametrize("name, depth", ENCODED)
def test_class_dynamics_commute_with_truncation(name, depth):
    ts = encode(load_system(SYSTEMS / name), depth).twinned
    counts = [len(quotient_at_depth(ts, n)) for n in range(depth + 1)]
    assert counts == sorted(counts)
    for n in range(2, depth + 1):
        for c in quotient_at_depth(ts, n):
            assert truncate_class(ts, t_step(ts, c)) == t_step(ts, truncate_class(ts, c))


def test_enclosures_are_nested_and_shrink(tent_encoding, golden_mean):
    tent, enc = tent_encoding
    for system, e in [(tent, enc), (golden_mean, encode_zero_dim(golden_mean, 5))]:
        seq = e.graph_sequence
        for n in range(1, e.depth + 1):
            for t in enumerate_threads(seq, n):
                inner = decode_psi(system, e, t)
                assert system.diam(inner) <= R(1, 2 ** n)
                assert system.subset(inner, decode_psi(system, e, truncate(seq, t, n - 1)))
