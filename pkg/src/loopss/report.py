"""Run reports: a deterministic, versioned JSON serialization of a run,
plus ASCII, LaTeX and JSON page renderings.

Matrix entries and coefficients are rendered as exact strings so reports
are byte-reproducible for a given scenario file and re-parse to equal
models.  Unreliable cells are bracketed in every rendering and excluded
from audits, keeping the trust boundary visible.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict

from . import __version__
from .engine import (
    Run,
    audit_convergence,
    collapse_report,
    nonzero_differentials,
)
from .errors import ScenarioError
from .scenarios import BundleRun, serialize_scenario

REPORT_SCHEMA_VERSION = 1


class InvariantsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    free_rank: int
    torsion: list[int]


class CellRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    page: int
    p: int
    q: int
    free_rank: int
    torsion: list[int]
    representatives: list[str]
    reliable: bool


class DifferentialRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    page: int
    p: int
    q: int
    target_p: int
    target_q: int
    matrix: list[list[str]]
    sources: list[str]
    images: list[str]


class AssignmentEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")
    page: int
    source: str
    image: str
    origin: str
    status: str


class SurvivorRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    q: int
    free_rank: int
    torsion: list[int]
    representatives: list[str]


class DiscrepancyRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    total_degree: int
    expected: InvariantsModel
    found: InvariantsModel
    mode: str
    survivors: list[SurvivorRecord]


class AuditSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    checked_degrees: list[int]
    discrepancies: list[DiscrepancyRecord]


class CollapseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    collapses: bool
    page: Optional[int] = None
    p: Optional[int] = None
    q: Optional[int] = None
    sources: list[str] = []
    images: list[str] = []


class RunReport(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: int
    engine_version: str
    fingerprint: str
    ring: str
    p_max: int
    q_max: int
    pages_computed: list[int]
    complete: bool
    transported: bool
    cells: list[CellRecord]
    differentials: list[DifferentialRecord]
    assignments: list[AssignmentEntry]
    audit: Optional[AuditSection] = None
    collapse: Optional[CollapseSection] = None


def _reliable_degrees(scenario) -> list[int]:
    from .engine import _reliable_total_degrees
    return _reliable_total_degrees(scenario)


def build_report(result: BundleRun) -> RunReport:
    """Assemble the full report for an executed bundle."""
    run: Run = result.run
    scenario = run.scenario
    ring = scenario.ring
    fingerprint = hashlib.sha256(serialize_scenario(result.bundle).encode()).hexdigest()
    cells = []
    for page in run.pages:
        for (p, q) in sorted(page.cells):
            inv = run.invariants(page.index, p, q)
            if inv.is_trivial():
                continue
            cells.append(CellRecord(
                page=page.index, p=p, q=q,
                free_rank=inv.free_rank, torsion=list(inv.torsion),
                representatives=run.representatives(page.index, p, q),
                reliable=scenario.is_reliable(p, q),
            ))
    differentials = [
        DifferentialRecord(
            page=view.page, p=view.cell[0], q=view.cell[1],
            target_p=view.target[0], target_q=view.target[1],
            matrix=[[ring.render(x) for x in row] for row in view.matrix.entries],
            sources=list(view.sources), images=list(view.images),
        )
        for view in nonzero_differentials(run)
    ]
    assignments = [
        AssignmentEntry(page=rec.page, source=rec.source, image=rec.image,
                        origin=rec.origin, status=rec.status)
        for rec in run.records
    ]
    audit = None
    if scenario.target is not None and run.complete:
        problems = audit_convergence(run, scenario.target)
        audit = AuditSection(
            checked_degrees=_reliable_degrees(scenario),
            discrepancies=[
                DiscrepancyRecord(
                    total_degree=d.total_degree,
                    expected=InvariantsModel(free_rank=d.expected.free_rank,
                                             torsion=list(d.expected.torsion)),
                    found=InvariantsModel(free_rank=d.found_free_rank,
                                          torsion=list(d.found_torsion)),
                    mode=d.mode,
                    survivors=[SurvivorRecord(p=s.p, q=s.q, free_rank=s.free_rank,
                                              torsion=list(s.torsion),
                                              representatives=list(s.representatives))
                               for s in d.survivors],
                )
                for d in problems
            ],
        )
    collapse = None
    if run.complete:
        outcome = collapse_report(run)
        collapse = CollapseSection(
            collapses=outcome.collapsed,
            page=outcome.page,
            p=outcome.cell[0] if outcome.cell else None,
            q=outcome.cell[1] if outcome.cell else None,
            sources=list(outcome.source_representatives),
            images=list(outcome.images),
        )
    return RunReport(
        schema_version=REPORT_SCHEMA_VERSION,
        engine_version=__version__,
        fingerprint=fingerprint,
        ring=ring.name,
        p_max=scenario.p_max,
        q_max=scenario.q_max,
        pages_computed=[page.index for page in run.pages],
        complete=run.complete,
        transported=result.source_run is not None,
        cells=cells,
        differentials=differentials,
        assignments=assignments,
        audit=audit,
        collapse=collapse,
    )


class CandidateModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    page: int
    direction: str
    p: int
    q: int
    partner_basis: list[str]


class SurvivorDetail(BaseModel):
    model_config = ConfigDict(extra="forbid")
    total_degree: int
    p: int
    q: int
    representative: str
    candidates: list[CandidateModel]


class AuditOutcome(BaseModel):
    model_config = ConfigDict(extra="forbid")
    consistent: bool
    checked_degrees: list[int]
    discrepancies: list[DiscrepancyRecord]
    survivor_details: list[SurvivorDetail]


def audit_outcome(result: BundleRun) -> AuditOutcome:
    """Audit a finished run and enumerate the differentials that could have
    removed each surviving class contradicting the target."""
    from .engine import annihilator_candidates, scenario_layout
    from .grammar import parse_element

    run = result.run
    scenario = run.scenario
    if scenario.target is None:
        raise ScenarioError("scenario has no target cohomology to audit against")
    problems = audit_convergence(run, scenario.target)
    layout = scenario_layout(scenario)
    details = []
    for problem in problems:
        for survivor in problem.survivors:
            for rep in survivor.representatives:
                element = parse_element(rep, scenario.ring, layout.combined)
                candidates = annihilator_candidates(run, element, 2)
                details.append(SurvivorDetail(
                    total_degree=problem.total_degree,
                    p=survivor.p, q=survivor.q, representative=rep,
                    candidates=[CandidateModel(page=c.page, direction=c.direction,
                                               p=c.partner[0], q=c.partner[1],
                                               partner_basis=list(c.partner_basis))
                                for c in candidates],
                ))
    return AuditOutcome(
        consistent=not problems,
        checked_degrees=_reliable_degrees(scenario),
        discrepancies=[
            DiscrepancyRecord(
                total_degree=d.total_degree,
                expected=InvariantsModel(free_rank=d.expected.free_rank,
                                         torsion=list(d.expected.torsion)),
                found=InvariantsModel(free_rank=d.found_free_rank,
                                      torsion=list(d.found_torsion)),
                mode=d.mode,
                survivors=[SurvivorRecord(p=s.p, q=s.q, free_rank=s.free_rank,
                                          torsion=list(s.torsion),
                                          representatives=list(s.representatives))
                           for s in d.survivors],
            )
            for d in problems
        ],
        survivor_details=details,
    )


def report_to_json(report: RunReport) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2) + "\n"


def report_from_json(text: str) -> RunReport:
    try:
        return RunReport.model_validate(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"report parse error at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from exc
    except ValueError as exc:
        raise ScenarioError(f"not a valid run report: {exc}") from exc


# -- renderers ----------------------------------------------------------------------


def _cell_text(record: Optional[CellRecord]) -> str:
    if record is None:
        return "."
    parts = []
    if record.free_rank:
        parts.append(str(record.free_rank))
    if record.torsion:
        parts.append("T(" + ",".join(str(d) for d in record.torsion) + ")")
    return "+".join(parts) if parts else "."


def _page_cells(report: RunReport, page: int) -> dict[tuple[int, int], CellRecord]:
    if page not in report.pages_computed:
        raise ScenarioError(
            f"unknown page index {page} (report has pages {report.pages_computed})")
    return {(c.p, c.q): c for c in report.cells if c.page == page}


def _is_reliable(report: RunReport, p: int, q: int) -> bool:
    return p <= report.p_max and q <= report.q_max - report.p_max + 1


def render_page_ascii(report: RunReport, page: int) -> str:
    """Grid with p across and q up; entries rank[+torsion], unreliable in
    brackets; nonzero differentials summarized below."""
    cells = _page_cells(report, page)
    columns = list(range(report.p_max + 1))
    texts = {}
    for q in range(report.q_max + 1):
        for p in columns:
            text = _cell_text(cells.get((p, q)))
            if not _is_reliable(report, p, q):
                text = f"[{text}]"
            texts[(p, q)] = text
    widths = {p: max(max(len(texts[(p, q)]) for q in range(report.q_max + 1)), len(str(p)))
              for p in columns}
    q_label = len(str(report.q_max))
    lines = [f"page {page} (ring {report.ring}, window p<={report.p_max} q<={report.q_max})"]
    for q in range(report.q_max, -1, -1):
        row = "  ".join(texts[(p, q)].rjust(widths[p]) for p in columns)
        lines.append(f"{str(q).rjust(q_label)} | {row}")
    lines.append(f"{' ' * q_label} +-{'-' * (sum(widths.values()) + 2 * (len(columns) - 1))}")
    lines.append(f"{' ' * q_label}   " + "  ".join(str(p).rjust(widths[p]) for p in columns))
    arrows = [d for d in report.differentials if d.page == page]
    if arrows:
        lines.append("differentials:")
        for d in arrows:
            maps = "; ".join(f"{s} -> {i}" for s, i in zip(d.sources, d.images)
                             if i != "0")
            lines.append(f"  d{d.page}: ({d.p},{d.q}) -> ({d.target_p},{d.target_q})  {maps}")
    else:
        lines.append("differentials: none")
    return "\n".join(lines) + "\n"


def _latex_group(record: Optional[CellRecord]) -> str:
    if record is None:
        return ""
    parts = []
    if record.free_rank == 1:
        parts.append(r"\mathbb{Z}")
    elif record.free_rank > 1:
        parts.append(r"\mathbb{Z}^{%d}" % record.free_rank)
    for d in record.torsion:
        parts.append(r"\mathbb{Z}/%d" % d)
    return r" \oplus ".join(parts)


def render_page_latex(report: RunReport, page: int) -> str:
    """A generic tikz picture: one node per nonzero cell, one arrow per
    nonzero differential."""
    cells = _page_cells(report, page)
    lines = [
        f"% page {page}",
        r"\begin{tikzpicture}[x=1.6cm,y=1.2cm]",
        r"\draw[->] (-0.6,0) -- (%.1f,0) node[right] {$p$};" % (report.p_max + 0.8),
        r"\draw[->] (0,-0.6) -- (0,%.1f) node[above] {$q$};" % (report.q_max + 0.8),
    ]
    for (p, q) in sorted(cells):
        group = _latex_group(cells[(p, q)])
        if not _is_reliable(report, p, q):
            group = r"[%s]" % group
        lines.append(r"\node at (%d,%d) {$%s$};" % (p, q, group))
    for d in report.differentials:
        if d.page != page:
            continue
        lines.append(r"\draw[->] (%d,%d) -- (%d,%d) node[midway,above] {$d_{%d}$};"
                     % (d.p, d.q, d.target_p, d.target_q, d.page))
    lines.append(r"\end{tikzpicture}")
    return "\n".join(lines) + "\n"


def render_page_json(report: RunReport, page: Optional[int]) -> str:
    """The verbatim cell table of one page, or the whole report when no
    page is given (the round-trip form)."""
    if page is None:
        return report_to_json(report)
    cells = _page_cells(report, page)
    doc = {
        "page": page,
        "cells": [cells[key].model_dump(mode="json") for key in sorted(cells)],
        "differentials": [d.model_dump(mode="json") for d in report.differentials
                          if d.page == page],
    }
    return json.dumps(doc, indent=2) + "\n"


def render_page(report: RunReport, page: Optional[int],
                fmt: Literal["ascii", "latex", "json"]) -> str:
    if fmt == "json":
        return render_page_json(report, page)
    if page is None:
        raise ScenarioError(f"--page is required for {fmt} rendering")
    if fmt == "ascii":
        return render_page_ascii(report, page)
    if fmt == "latex":
        return render_page_latex(report, page)
    raise ScenarioError(f"unknown render format {fmt!r}")
