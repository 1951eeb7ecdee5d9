"""Twinned axioms, the finite-depth quotient and the neighbourhood machinery."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graph, hom, identity_twinned, loops, root_twinned, split_class_twinned
from src.errors import AxiomViolation, DepthError, StructuralError
from src.limit_engine import Thread
from src.twinned_engine import (
    ClassAtDepth,
    CylinderUnion,
    TwinnedSequence,
    class_of,
    continuity_check,
    ds3b_projection_check,
    f_relation_at_depth,
    g_successors,
    nbhd_bar,
    nbhd_bar_iter,
    nbhd_tilde,
    normalize_markers,
    quotient_at_depth,
    saturation_check,
    t_step,
    truncate_class,
    validate_twinned,
)


def _t(v, n):
    return Thread(depth=n, last_vertex=v)


def _chain_twinned():
    """F_2 has the chain a ~ b ~ c over p ~ s ~ q, but p and q are not F_1-related."""
    g0 = graph(["r"], [("r", "r")])
    g1 = graph(["p", "s", "q"], [("p", "p"), ("s", "s"), ("q", "q")])
    g2 = graph(["a", "b", "c"], [("a", "a"), ("b", "b"), ("c", "c")])
    return TwinnedSequence(
        g_levels=(g0, g1, g2),
        f_levels=(loops(["r"]), loops(["p", "s", "q"], [("p", "s"), ("s", "q")]),
                  loops(["a", "b", "c"], [("a", "b"), ("b", "c")])),
        bonding=(hom(g1, g0, {"p": "r", "s": "r", "q": "r"}), hom(g2, g1, {"a": "p", "b": "s", "c": "q"})),
    )


def _complete_twinned():
    g0 = graph(["r"], [("r", "r")])
    g1 = graph(["p", "q"], [("p", "q"), ("q", "p")])
    f1 = loops(["p", "q"], [("p", "q")])
    return TwinnedSequence(g_levels=(g0, g1), f_levels=(loops(["r"]), f1), bonding=(hom(g1, g0, {"p": "r", "q": "r"}),))


def test_root_loop_is_valid():
    ts = root_twinned()
    assert validate_twinned(ts).ok
    assert len(quotient_at_depth(ts, 0)) == 1
    assert len(f_relation_at_depth(ts, 0)) == 1


def test_level_counts_must_agree():
    ts = root_twinned()
    with pytest.raises(StructuralError):
        TwinnedSequence(g_levels=ts.g_levels, f_levels=ts.f_levels * 2)


def test_ds3_violation_witness(ds3):
    report = validate_twinned(ds3)
    failures = report.failures("DS3")
    assert [(v.level, v.witness) for v in failures] == [(2, ("a", "b", "a", "c"))]
    assert not report.failures("DS0") and not report.failures("DS1") and not report.failures("DS2")


def test_ds3_violation_breaks_continuity(ds3):
    verdict = continuity_check(ds3, _t("a", 2), k=1, cap=2)
    assert not verdict
    i, x, y = verdict.witness
    assert i == 2 and x == _t("b", 2) and y == _t("c", 2)
    assert continuity_check(ds3, _t("a", 2), k=0, cap=2)


def test_t_step_on_inconsistent_class_raises(ds3):
    cls = class_of(ds3, _t("a", 2))
    assert cls.vertices() == {"a", "b"}
    with pytest.raises(AxiomViolation):
        t_step(ds3, cls)


def test_quotient_and_truncation(ds3):
    classes = quotient_at_depth(ds3, 2)
    assert [c.vertices() for c in classes] == [{"a", "b"}, {"c"}]
    assert truncate_class(ds3, classes[0]).vertices() == {"p"}
    assert t_step(ds3, classes[1]).vertices() == {"q"}
    assert g_successors(ds3, _t("b", 2)) == {_t("c", 2)}


def test_identity_f_levels_keep_cylinders():
    ts = identity_twinned(depth=3)
    assert validate_twinned(ts).ok
    x = _t("010", 3)
    assert nbhd_bar(ts, x, 1).markers == {(1, "0")}
    assert nbhd_bar_iter(ts, x, 1, 3).expand(ts, 3) == {"000", "001", "010", "011"}
    assert nbhd_tilde(ts, x, 1, 3).markers == {(1, "0")}
    for j in range(4):
        assert saturation_check(ts, x, j, 3)
        assert saturation_check(ts, x, j, 3, closed=True)
    for k in range(3):
        assert continuity_check(ts, x, k, 3)
    assert len(quotient_at_depth(ts, 3)) == 8
    assert t_step(ts, class_of(ts, x)).vertices() == {"01"}


def test_complete_f_level():
    ts = _complete_twinned()
    assert validate_twinned(ts).ok
    assert nbhd_bar(ts, _t("p", 1), 1).markers == {(0, "r")}
    assert saturation_check(ts, _t("p", 1), 1, 1)
    assert len(quotient_at_depth(ts, 1)) == 1
    assert continuity_check(ts, _t("p", 1), 0, 1)


def test_projection_of_raw_chains():
    ts = _chain_twinned()
    verdict = ds3b_projection_check(ts, 2)
    assert not verdict and verdict.witness == ("a", "b", "c")
    assert [v.level for v in validate_twinned(ts).failures("DS3b")] == [2]
    assert ds3b_projection_check(identity_twinned(), 2)
    with pytest.raises(DepthError):
        ds3b_projection_check(ts, 0)


def test_vertex_set_mismatch_reported_as_ds2():
    g0 = graph(["r"], [("r", "r")])
    ts = TwinnedSequence(g_levels=(g0,), f_levels=(loops(["s"]),))
    report = validate_twinned(ts)
    assert report.failures("DS2")


def test_markers_under_coarser_markers_are_dropped():
    ts = identity_twinned(depth=2)
    union = normalize_markers(ts, [(1, "0"), (2, "01"), (2, "10")])
    assert union.markers == {(1, "0"), (2, "10")}
    assert union.expand(ts, 2) == {"00", "01", "10"}


def test_depth_guards():
    ts = identity_twinned(depth=1)
    with pytest.raises(DepthError):
        quotient_at_depth(ts, 2)
    with pytest.raises(DepthError):
        t_step(ts, ClassAtDepth(depth=0, members=frozenset({_t("", 0)})))
    with pytest.raises(DepthError):
        continuity_check(ts, _t("0", 1), 1, 1)


def test_complete_sibling_families_merge_into_their_parent():
    ts = identity_twinned(depth=2)
    assert normalize_markers(ts, [(2, "00"), (2, "01"), (2, "10")]).markers == {(1, "0"), (2, "10")}
    assert normalize_markers(ts, [(2, "00"), (2, "01")]) == normalize_markers(ts, [(1, "0")])
    everything = normalize_markers(ts, [(2, w) for w in ("00", "01", "10", "11")])
    assert everything.markers == {(0, "")}


_TREE = identity_twinned(depth=3)
_WORDS = {i: [format(k, f"0{i}b") if i else "" for k in range(2 ** i)] for i in range(4)}
_markers = st.sets(st.integers(0, 3).flatmap(lambda i: st.tuples(st.just(i), st.sampled_from(_WORDS[i]))), max_size=8)


@settings(max_examples=100, deadline=None)
@given(markers=_markers)
def test_normal_form_depends_only_on_the_cylinder_set(markers):
    union = normalize_markers(_TREE, markers)
    cells = union.expand(_TREE, 3)
    assert cells == CylinderUnion(markers=frozenset(markers)).expand(_TREE, 3)
    assert normalize_markers(_TREE, [(3, w) for w in cells]) == union


def test_closed_saturation_sees_classes_wider_than_a_neighbourhood():
    ts = split_class_twinned()
    assert validate_twinned(ts).ok
    assert [c.vertices() for c in quotient_at_depth(ts, 1)] == [{"a", "b", "c"}, {"d"}]
    x = _t("a", 1)
    assert saturation_check(ts, x, 1, 1)
    verdict = saturation_check(ts, x, 1, 1, closed=True)
    assert not verdict and verdict.witness == _t("c", 1)
    assert saturation_check(ts, x, 0, 1, closed=True)


@pytest.mark.parametrize("build", [lambda: identity_twinned(depth=3), _chain_twinned, split_class_twinned])
def test_fattening_grows_with_the_level_and_shrinks_with_the_start(build):
    ts = build()
    cap = ts.depth
    for v in ts.g_levels[cap].vertices:
        x = _t(v, cap)
        for j in range(cap + 1):
            for i in range(j, cap):
                finer = nbhd_bar_iter(ts, x, j, i + 1).expand(ts, i + 1)
                assert nbhd_bar_iter(ts, x, j, i).expand(ts, i + 1) <= finer
            for later in range(j + 1, cap + 1):
                assert nbhd_tilde(ts, x, later, cap).expand(ts, cap) <= nbhd_tilde(ts, x, j, cap).expand(ts, cap)
