"""Command-line front end: validate, encode, simulate, check and export.

Exit codes: 0 all checks passed, 1 an axiom or property failed, 2 the input
could not be parsed, 3 cover refinement hit its cap, 4 usage or depth error.
"""
import json
import logging
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Optional

import typer
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from rich.console import Console
from rich.table import Table

from src import __version__
from src.encoder import (
    Encoding,
    conjugacy_check,
    decode_psi,
    encode,
    encode_zero_dim,
    level_summaries,
    track_orbit,
    verify_conditions,
    verify_encoding_graphs,
)
from src.errors import (
    AxiomViolation,
    DepthError,
    InvalidBackend,
    RefinementCapExceeded,
    StructuralError,
)
from src.graph_core import token_key
from src.helpers import load_settings, setup_logging
from src.limit_engine import (
    GraphSequence,
    Thread,
    cover_successor,
    enumerate_threads,
    surjectivity_at_depth,
    validate_sequence,
)
from src.reports import AxiomReport
from src.serialization import Document, dumps, export_dot, export_json_slice, read_document, write_document
from src.systems import load_system
from src.twinned_engine import (
    TwinnedSequence,
    class_of,
    continuity_check,
    ds3b_projection_check,
    quotient_at_depth,
    saturation_check,
    t_step,
    validate_twinned,
)

logger = logging.getLogger(__name__)

app = typer.Typer(help="Encode dynamical systems as twinned graph sequences and check the axioms exactly.")
console = Console(soft_wrap=True)
err_console = Console(stderr=True, soft_wrap=True)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CAP, EXIT_USAGE = 0, 1, 2, 3, 4


class OutputFormat(str, Enum):
    text = "text"
    json = "json"
    dot = "dot"


class EncodeMode(str, Enum):
    twinned = "twinned"
    zero_dim = "zero-dim"


class RunConfig(BaseModel):
    """Everything that determines a run; echoed in every report header."""

    model_config = ConfigDict(frozen=True)

    command: str
    input: Path
    depth: Optional[int] = Field(None, ge=0)
    seed: int = 0
    samples: Optional[int] = Field(None, ge=0)
    cap: Optional[int] = Field(None, ge=0)
    out: Optional[Path] = None
    format: OutputFormat = OutputFormat.text
    mode: EncodeMode = EncodeMode.twinned
    start: Optional[str] = None
    steps: Optional[int] = Field(None, ge=0)
    level: Optional[int] = Field(None, ge=0)


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the configured log level.")):
    setup_logging(log_level)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Translate package errors into exit codes."""
    try:
        yield
    except RefinementCapExceeded as exc:
        err_console.print(f"❌ {exc}")
        raise typer.Exit(EXIT_CAP)
    except (DepthError, InvalidBackend) as exc:
        err_console.print(f"❌ {exc}")
        raise typer.Exit(EXIT_USAGE)
    except (StructuralError, ValidationError, yaml.YAMLError, OSError) as exc:
        err_console.print(f"❌ cannot read input: {exc}")
        raise typer.Exit(EXIT_PARSE)
    except AxiomViolation as exc:
        err_console.print(f"❌ {exc.axiom} FAIL: {exc} (witness: {exc.witness!r})")
        raise typer.Exit(EXIT_FAIL)


def _config(**kwargs) -> RunConfig:
    try:
        return RunConfig(**kwargs)
    except ValidationError as exc:
        err_console.print(f"❌ invalid options: {exc}")
        raise typer.Exit(EXIT_USAGE)


def _header(config: RunConfig) -> dict:
    return {"tool": "twinned", "version": __version__, "seed": config.seed, "config": config.model_dump(mode="json")}


def _emit_reports(config: RunConfig, reports: list[AxiomReport]) -> int:
    ok = all(r.ok for r in reports)
    if config.format == OutputFormat.json:
        payload = {**_header(config), "ok": ok, "reports": [r.model_dump(mode="json") for r in reports]}
        console.print_json(json.dumps(payload, default=str))
    else:
        console.rule(f"{config.command} {config.input} (version {__version__}, seed {config.seed})")
        for report in reports:
            mark = "✅" if report.ok else "❌"
            console.print(f"{mark} {report.subject}: {'PASS' if report.ok else 'FAIL'}")
            for line in report.lines():
                style = "green" if line.endswith("PASS") else "red"
                console.print(f"    {line}", style=style, markup=False, highlight=False)
    return EXIT_OK if ok else EXIT_FAIL


def _family(subject: str, depth: int, run: Callable[[AxiomReport], None]) -> AxiomReport:
    """Run one property family; a runtime axiom failure becomes a report entry."""
    report = AxiomReport(subject=subject, depth=depth)
    try:
        run(report)
    except AxiomViolation as exc:
        report.fail(exc.axiom, None, exc.witness, str(exc))
    logger.info("%s: %s", subject, "PASS" if report.ok else f"{len(report.violations)} failure(s)")
    return report


def _structure_reports(doc: Document) -> list[AxiomReport]:
    if isinstance(doc, Encoding):
        system = doc.system
        reports = [validate_twinned(doc.twinned)] if doc.twinned is not None else [validate_sequence(doc.sequence)]
        if doc.mode == "twinned":
            reports.append(verify_conditions(system, doc.levels))
        reports.append(verify_encoding_graphs(system, doc))
        return reports
    if isinstance(doc, TwinnedSequence):
        return [validate_twinned(doc)]
    return [validate_sequence(doc)]


def _twinned_families(ts: TwinnedSequence, cap: int) -> list[AxiomReport]:
    threads = sorted(enumerate_threads(ts.g_sequence, cap), key=lambda t: token_key(t.last_vertex))
    # a single class swallows every neighbourhood; only the raw relation says anything then
    closed = len(quotient_at_depth(ts, cap)) > 1
    logger.info("saturation at cap %d against %s", cap, "closure classes" if closed else "the raw F-relation")

    def continuity(report: AxiomReport) -> None:
        for k in range(cap):
            for x in threads:
                report.record("continuity", k, continuity_check(ts, x, k, cap))

    def saturation(report: AxiomReport) -> None:
        for j in range(cap + 1):
            for x in threads:
                report.record("saturation", j, saturation_check(ts, x, j, cap, closed=closed))

    def projection(report: AxiomReport) -> None:
        for n in range(1, ts.depth + 1):
            report.record("DS3b-projection", n, ds3b_projection_check(ts, n))

    return [
        _family(f"continuity (cap {cap})", cap, continuity),
        _family(f"saturation (cap {cap}, {'classes' if closed else 'raw relation'})", cap, saturation),
        _family("raw-relation projection", ts.depth, projection),
    ]


def _cover_families(seq: GraphSequence) -> list[AxiomReport]:
    def surjectivity(report: AxiomReport) -> None:
        for n in range(1, seq.depth + 1):
            report.record("cover-successor-onto", n, surjectivity_at_depth(seq, n))

    return [_family("cover successor", seq.depth, surjectivity)]


def _conjugacy_family(enc: Encoding, samples: int, seed: int) -> AxiomReport:
    def conjugacy(report: AxiomReport) -> None:
        for n in range(1, enc.depth + 1):
            report.merge(conjugacy_check(enc.system, enc, n, samples, seed))

    return _family(f"conjugacy (seed {seed}, {samples} samples)", enc.depth, conjugacy)


@app.command()
def validate(
    path: Path = typer.Argument(..., help="Graph sequence, twinned sequence or encoding bundle (JSON)."),
    fmt: OutputFormat = typer.Option(OutputFormat.text, "--format", help="text or json"),
):
    """Check every structural axiom of a document."""
    config = _config(command="validate", input=path, format=fmt)
    with _exit_codes():
        doc = read_document(path)
        reports = _structure_reports(doc)
    raise typer.Exit(_emit_reports(config, reports))


@app.command(name="encode")
def encode_command(
    spec: Path = typer.Argument(..., help="System spec (YAML)."),
    depth: int = typer.Option(..., "--depth", help="Number of refinement levels."),
    mode: EncodeMode = typer.Option(EncodeMode.twinned, "--mode"),
    out: Optional[Path] = typer.Option(None, "--out", help="Bundle path; stdout when omitted."),
    fmt: OutputFormat = typer.Option(OutputFormat.text, "--format", help="Summary format: text or json"),
):
    """Build an encoding bundle, validate it and write it out."""
    config = _config(command="encode", input=spec, depth=depth, mode=mode, out=out, format=fmt)
    with _exit_codes():
        system = load_system(spec)
    with _exit_codes():
        enc = encode(system, depth) if mode == EncodeMode.twinned else encode_zero_dim(system, depth)
        summaries = level_summaries(system, enc)
        reports = _structure_reports(enc)
    if out is not None:
        write_document(enc, out)
    else:
        typer.echo(dumps(enc), nl=False)
    target = console if out is not None else err_console
    if fmt == OutputFormat.json:
        payload = {**_header(config), "levels": [s.model_dump(mode="json") for s in summaries]}
        target.print_json(json.dumps(payload, default=str))
    else:
        table = Table(title=f"{system.kind} {system.name} ({mode.value}, depth {depth})")
        for column in ("level", "vertices", "G-edges", "F-edges", "classes", "epsilon", "mesh", "lebesgue"):
            table.add_column(column)
        for s in summaries:
            table.add_row(str(s.level), str(s.vertices), str(s.g_edges), str(s.f_edges or "-"),
                          str(s.classes or "-"), str(s.epsilon), str(s.mesh), str(s.lebesgue))
        target.print(table)
    for report in reports:
        if not report.ok:
            target.print(f"❌ {report.subject}: {report.violations[0].describe()}")
    raise typer.Exit(EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL)


@app.command()
def simulate(
    bundle: Path = typer.Argument(..., help="Encoding bundle (JSON)."),
    start: str = typer.Option(..., "--start", help="Top-level vertex id, or a point of the system."),
    steps: int = typer.Option(..., "--steps"),
    fmt: OutputFormat = typer.Option(OutputFormat.text, "--format", help="text or json"),
):
    """Follow the class dynamics from a start class and print enclosures."""
    config = _config(command="simulate", input=bundle, start=start, steps=steps, format=fmt)
    with _exit_codes():
        enc = read_document(bundle)
    if not isinstance(enc, Encoding):
        err_console.print("❌ simulate needs an encoding bundle")
        raise typer.Exit(EXIT_USAGE)
    if steps > enc.depth:
        err_console.print(f"❌ {steps} steps exceed the bundle depth {enc.depth}")
        raise typer.Exit(EXIT_USAGE)
    system = enc.system
    rows = []
    with _exit_codes():
        if start in enc.vertex_index[enc.depth]:
            x = Thread(depth=enc.depth, last_vertex=start)
            members = [x] if enc.twinned is None else sorted(class_of(enc.twinned, x).members,
                                                             key=lambda t: token_key(t.last_vertex))
            for s in range(steps + 1):
                enclosure = system.union(*(decode_psi(system, enc, t) for t in members))
                rows.append({
                    "step": s,
                    "class": [str(t) for t in members],
                    "enclosure": system.describe(enclosure),
                    "diameter": str(system.diam(enclosure)),
                })
                if s == steps:
                    break
                if enc.twinned is None:
                    members = [cover_successor(enc.sequence, members[0])]
                else:
                    image = t_step(enc.twinned, class_of(enc.twinned, members[0]))
                    members = sorted(image.members, key=lambda t: token_key(t.last_vertex))
        else:
            for step in track_orbit(system, enc, system.parse_point(start), steps):
                rows.append(step.model_dump(mode="json"))
    if fmt == OutputFormat.json:
        console.print_json(json.dumps({**_header(config), "trajectory": rows}, default=str))
    else:
        console.rule(f"simulate {bundle} from {start} ({steps} steps)")
        for row in rows:
            extra = ""
            if "contains_point" in row:
                extra = f" point {row['point']} {'✅' if row['contains_point'] else '❌'}"
            label = ", ".join(row["class"]) if "class" in row else row["thread"]
            console.print(f"step {row['step']}: [{label}] enclosure {row['enclosure']} "
                          f"diam {row['diameter']}{extra}", markup=False, highlight=False)
    if any(row.get("contains_point") is False for row in rows):
        raise typer.Exit(EXIT_FAIL)
    raise typer.Exit(EXIT_OK)


@app.command()
def check(
    bundle: Path = typer.Argument(..., help="Encoding bundle or sequence document (JSON)."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples"),
    cap: Optional[int] = typer.Option(None, "--cap"),
    fmt: OutputFormat = typer.Option(OutputFormat.text, "--format", help="text or json"),
):
    """Run the whole property suite and aggregate PASS/FAIL per family."""
    settings = load_settings().checks
    config = _config(
        command="check", input=bundle, format=fmt,
        seed=settings.seed if seed is None else seed,
        samples=settings.samples if samples is None else samples,
        cap=settings.cap if cap is None else cap,
    )
    with _exit_codes():
        doc = read_document(bundle)
        reports = _structure_reports(doc)
    ts = doc.twinned if isinstance(doc, Encoding) else doc if isinstance(doc, TwinnedSequence) else None
    seq = doc.graph_sequence if isinstance(doc, Encoding) else doc if isinstance(doc, GraphSequence) else None
    if all(r.ok for r in reports):
        with _exit_codes():
            if ts is not None:
                reports.extend(_twinned_families(ts, min(config.cap, ts.depth)))
            elif seq is not None and seq.kind == "covers":
                reports.extend(_cover_families(seq))
            if isinstance(doc, Encoding) and doc.depth >= 1:
                reports.append(_conjugacy_family(doc, config.samples, config.seed))
    else:
        logger.warning("structural checks failed; property families skipped")
    raise typer.Exit(_emit_reports(config, reports))


@app.command()
def export(
    bundle: Path = typer.Argument(..., help="Encoding bundle or sequence document (JSON)."),
    level: Optional[int] = typer.Option(None, "--level", help="Level to export; the deepest by default."),
    fmt: OutputFormat = typer.Option(OutputFormat.dot, "--format", help="dot or json"),
    out: Optional[Path] = typer.Option(None, "--out"),
):
    """Write one level as DOT, or levels 0..level as a sequence document."""
    _config(command="export", input=bundle, level=level, format=fmt, out=out)
    if fmt == OutputFormat.text:
        err_console.print("❌ export writes dot or json")
        raise typer.Exit(EXIT_USAGE)
    with _exit_codes():
        doc = read_document(bundle)
        level = doc.depth if level is None else level
        if fmt == OutputFormat.dot:
            text = export_dot(doc, level)
        else:
            text = json.dumps(export_json_slice(doc, level), indent=2, ensure_ascii=False) + "\n"
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        console.print(f"✅ wrote level {level} to {out}")
    raise typer.Exit(EXIT_OK)
