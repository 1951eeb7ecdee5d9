"""JSON documents for sequences, twinned sequences and encoding bundles; DOT export.

Every document carries a ``type`` field and is written from
``model_dump(mode="json")``: graphs as ``{vertices, edges, kind}`` with both
ordered pairs of every symmetric edge, bonding maps as ``{"map": {u: v}}``,
all in canonical order. Map keys are JSON strings, so vertex ids in documents
are strings.

The reader also accepts bonding maps given as ``[[u, v], ...]`` pair lists and
symmetric graphs that list each edge once.
"""
import json
import logging
from pathlib import Path
from typing import Any, Union

import pydot

from src import __version__
from src.encoder import CoverLevel, Encoding, TaggedVertex
from src.errors import DepthError, StructuralError
from src.graph_core import Graph, GraphHom, pair_key
from src.limit_engine import GraphSequence
from src.systems import system_from_dict
from src.twinned_engine import TwinnedSequence

logger = logging.getLogger(__name__)

Document = Union[GraphSequence, TwinnedSequence, Encoding]


def _token(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_token(v) for v in value)
    return value


def graph_from_json(data: dict) -> Graph:
    kind = data.get("kind", "directed")
    edges = {(_token(u), _token(v)) for u, v in data.get("edges", [])}
    if kind == "symmetric":
        edges |= {(v, u) for u, v in edges}
    return Graph(vertices=frozenset(_token(v) for v in data["vertices"]), edges=frozenset(edges), kind=kind)


def _bonding_from_json(data: Any, source: Graph, target: Graph) -> GraphHom:
    if isinstance(data, dict):
        mapping = {_token(v): _token(w) for v, w in data["map"].items()}
    else:
        mapping = {_token(v): _token(w) for v, w in data}
    return GraphHom(source=source, target=target, mapping=mapping)


def _bonding_list(data: dict, levels: list) -> list:
    maps = data.get("bonding", [])
    if len(maps) != len(levels) - 1:
        raise StructuralError(f"{len(levels)} levels need {len(levels) - 1} bonding maps, got {len(maps)}")
    return [_bonding_from_json(m, levels[i + 1], levels[i]) for i, m in enumerate(maps)]


def sequence_to_json(seq: GraphSequence) -> dict:
    return {"type": "graph_sequence", **seq.model_dump(mode="json")}


def sequence_from_json(data: dict) -> GraphSequence:
    levels = [graph_from_json(g) for g in data["levels"]]
    bonding = _bonding_list(data, levels)
    return GraphSequence(levels=tuple(levels), bonding=tuple(bonding), kind=data.get("kind", "homomorphisms"))


def twinned_to_json(ts: TwinnedSequence) -> dict:
    return {"type": "twinned_sequence", **ts.model_dump(mode="json")}


def twinned_from_json(data: dict) -> TwinnedSequence:
    g_levels = [graph_from_json(g) for g in data["g_levels"]]
    f_levels = [graph_from_json(dict(f, kind=f.get("kind", "symmetric"))) for f in data["f_levels"]]
    bonding = _bonding_list(data, g_levels)
    return TwinnedSequence(g_levels=tuple(g_levels), f_levels=tuple(f_levels), bonding=tuple(bonding))


def encoding_to_json(enc: Encoding) -> dict:
    return {
        "type": "encoding",
        "version": __version__,
        **enc.model_dump(mode="json", by_alias=True, exclude_none=True),
    }


def encoding_from_json(data: dict) -> Encoding:
    system = system_from_dict(data["system_spec"])
    levels = tuple(
        CoverLevel(cover=tuple(system.set_from_json(u) for u in level["cover"]), epsilon=level["epsilon"])
        for level in data["levels"]
    )
    tables = tuple(tuple(TaggedVertex.model_validate(v) for v in table) for table in data["vertex_table"])
    mode = data.get("mode", "twinned")
    twinned = twinned_from_json(data["twinned"]) if mode == "twinned" else None
    sequence = sequence_from_json(data["sequence"]) if mode == "zero-dim" else None
    return Encoding(system=system, mode=mode, levels=levels, vertex_table=tables, twinned=twinned, sequence=sequence)


def document_to_json(doc: Document) -> dict:
    if isinstance(doc, Encoding):
        return encoding_to_json(doc)
    if isinstance(doc, TwinnedSequence):
        return twinned_to_json(doc)
    return sequence_to_json(doc)


def document_from_json(data: Any) -> Document:
    """Build whichever document ``data`` describes; malformed input raises StructuralError."""
    if not isinstance(data, dict):
        raise StructuralError("a document must be a JSON object")
    kind = data.get("type")
    if kind is None:
        kind = "encoding" if "system_spec" in data else "twinned_sequence" if "g_levels" in data else "graph_sequence"
    readers = {
        "encoding": encoding_from_json,
        "twinned_sequence": twinned_from_json,
        "graph_sequence": sequence_from_json,
    }
    if kind not in readers:
        raise StructuralError(f"unknown document type {kind!r}")
    try:
        return readers[kind](data)
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed {kind} document: {exc}") from exc


def dumps(doc: Document) -> str:
    return json.dumps(document_to_json(doc), indent=2, ensure_ascii=False) + "\n"


def read_document(path: Union[str, Path]) -> Document:
    with open(path, 'r') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise StructuralError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    doc = document_from_json(data)
    logger.debug("read %s from %s", type(doc).__name__, path)
    return doc


def write_document(doc: Document, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(dumps(doc))
    logger.info("wrote %s to %s", type(doc).__name__, path)


# --- slices and DOT ---------------------------------------------------------


def _document_depth(doc: Document) -> int:
    return doc.depth


def export_json_slice(doc: Document, level: int) -> dict:
    """Levels ``0..level`` of ``doc`` as a standalone sequence document."""
    if not 0 <= level <= _document_depth(doc):
        raise DepthError(f"level {level} is outside 0..{_document_depth(doc)}")
    if isinstance(doc, Encoding):
        doc = doc.twinned if doc.twinned is not None else doc.sequence
    if isinstance(doc, TwinnedSequence):
        return twinned_to_json(doc.truncated(level))
    return sequence_to_json(
        GraphSequence(levels=doc.levels[: level + 1], bonding=doc.bonding[:level], kind=doc.kind)
    )


def export_dot(doc: Document, level: int) -> str:
    """G-edges solid and F-edges dashed (undirected) on one digraph."""
    if not 0 <= level <= _document_depth(doc):
        raise DepthError(f"level {level} is outside 0..{_document_depth(doc)}")
    labels = {}
    if isinstance(doc, Encoding):
        system = doc.system
        for v in doc.vertex_table[level]:
            labels[v.id] = f"{v.id or 'root'}\n{system.describe(doc.levels[level].cover[v.set_id])}"
        g = doc.graph_sequence.levels[level]
        f = doc.twinned.f_levels[level] if doc.twinned is not None else None
    elif isinstance(doc, TwinnedSequence):
        g, f = doc.g_levels[level], doc.f_levels[level]
    else:
        g, f = doc.levels[level], None

    dot = pydot.Dot(f"level_{level}", graph_type="digraph")
    names = {}
    for k, v in enumerate(g.sorted_vertices()):
        names[v] = f"n{k}"
        dot.add_node(pydot.Node(names[v], label=labels.get(v, str(v) or "root")))
    for u, v in g.sorted_edges():
        dot.add_edge(pydot.Edge(names[u], names[v], style="solid"))
    if f is not None:
        for u, v in f.sorted_edges():
            if pair_key((u, v)) <= pair_key((v, u)):
                dot.add_edge(pydot.Edge(names[u], names[v], style="dashed", dir="none"))
    return dot.to_string()
