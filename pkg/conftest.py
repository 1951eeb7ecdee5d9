"""Shared builders for the test suite."""
from pathlib import Path

import hypothesis.strategies as st
import pytest

from src.graph_core import Graph, GraphHom
from src.limit_engine import GraphSequence
from src.systems import load_system
from src.twinned_engine import TwinnedSequence

ROOT = Path(__file__).parent
SYSTEMS = ROOT / 'config' / 'systems'
DATA = ROOT / 'data'


def graph(vertices, edges=(), kind="directed"):
    edges = set(edges)
    if kind == "symmetric":
        edges |= {(v, u) for u, v in edges}
    return Graph(vertices=frozenset(vertices), edges=frozenset(edges), kind=kind)


def loops(vertices, extra=()):
    return graph(vertices, [(v, v) for v in vertices] + list(extra), kind="symmetric")


def hom(source, target, mapping):
    return GraphHom(source=source, target=target, mapping=mapping)


def root_twinned():
    g0 = graph(["r"], [("r", "r")])
    return TwinnedSequence(g_levels=(g0,), f_levels=(loops(["r"]),))


def ds3_twinned():
    """DS3 fails at level 2: a ~ b in F_2 but their successors land on p and q, unrelated in F_1."""
    g0 = graph(["r"], [("r", "r")])
    g1 = graph(["p", "q"], [("p", "p"), ("p", "q"), ("q", "q")])
    g2 = graph(["a", "b", "c"], [("a", "a"), ("b", "c"), ("c", "c")])
    f0, f1, f2 = loops(["r"]), loops(["p", "q"]), loops(["a", "b", "c"], [("a", "b")])
    return TwinnedSequence(
        g_levels=(g0, g1, g2),
        f_levels=(f0, f1, f2),
        bonding=(hom(g1, g0, {"p": "r", "q": "r"}), hom(g2, g1, {"a": "p", "b": "p", "c": "q"})),
    )


def split_class_twinned():
    """Valid at depth 1, with the F_1 chain a ~ b ~ c: the class {a, b, c} is wider than the F_1-neighbourhood of a."""
    g0 = graph(["r"], [("r", "r")])
    g1 = graph("abcd", [(v, v) for v in "abcd"])
    f1 = loops("abcd", [("a", "b"), ("b", "c")])
    return TwinnedSequence(g_levels=(g0, g1), f_levels=(loops(["r"]), f1), bonding=(hom(g1, g0, dict.fromkeys("abcd", "r")),))


def identity_twinned(depth=2):
    """Binary tree of single loops; F-levels carry self-loops only."""
    g_levels, f_levels, bonding = [], [], []
    for i in range(depth + 1):
        words = [format(k, f"0{i}b") if i else "" for k in range(2 ** i)]
        g = graph(words, [(w, w) for w in words])
        g_levels.append(g)
        f_levels.append(loops(words))
        if i:
            bonding.append(hom(g, g_levels[i - 1], {w: w[:-1] for w in words}))
    return TwinnedSequence(g_levels=tuple(g_levels), f_levels=tuple(f_levels), bonding=tuple(bonding))


@pytest.fixture
def ds3():
    return ds3_twinned()


@pytest.fixture
def swap():
    return load_system(SYSTEMS / 'swap.yaml')


@pytest.fixture
def fixed_point():
    return load_system(SYSTEMS / 'fixed_point.yaml')


@pytest.fixture
def tent():
    return load_system(SYSTEMS / 'tent.yaml')


@pytest.fixture
def full_shift():
    return load_system(SYSTEMS / 'full_shift.yaml')


@pytest.fixture
def golden_mean():
    return load_system(SYSTEMS / 'golden_mean.yaml')


@st.composite
def edge_surjective_graphs(draw, max_vertices=3):
    n = draw(st.integers(min_value=1, max_value=max_vertices))
    vertices = [f"L0v{k}" for k in range(n)]
    cycle = {(vertices[k], vertices[(k + 1) % n]) for k in range(n)}
    extra = draw(st.sets(st.tuples(st.sampled_from(vertices), st.sampled_from(vertices)), max_size=3))
    return graph(vertices, cycle | extra)


@st.composite
def cover_sequences(draw, max_vertices=12, max_depth=4, max_copies=2):
    """Random sequences of graph covers.

    Each new vertex is a copy of an edge ``(u, w)`` of the level above and
    maps to ``u``; its out-edges all go to copies of edges leaving ``w``, so
    every bonding map is +directional and edge-surjective.
    """
    levels = [draw(edge_surjective_graphs())]
    bonding = []
    for i in range(1, max_depth + 1):
        g = levels[-1]
        copies = draw(st.integers(min_value=1, max_value=max_copies))
        new = [(u, w, j) for u, w in g.sorted_edges() for j in range(copies)]
        if len(new) > max_vertices:
            break
        names = {t: f"L{i}v{k}" for k, t in enumerate(new)}
        edges = set()
        for t in new:
            targets = [s for s in new if s[0] == t[1]]
            chosen = draw(st.lists(st.sampled_from(targets), min_size=1, max_size=len(targets), unique=True))
            edges.update((names[t], names[s]) for s in chosen)
        hit = {b for _, b in edges}
        for s in new:
            if names[s] not in hit:
                source = draw(st.sampled_from([t for t in new if t[1] == s[0]]))
                edges.add((names[source], names[s]))
        level = graph(names.values(), edges)
        bonding.append(hom(level, g, {names[t]: t[0] for t in new}))
        levels.append(level)
    return GraphSequence(levels=tuple(levels), bonding=tuple(bonding), kind="covers")
