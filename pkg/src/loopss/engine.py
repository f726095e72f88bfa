"""The spectral sequence engine.

A scenario fixes a coefficient ring, fiber and base presentations, a
rectangular window of bidegrees, and a list of differential assignments on
generator classes.  The engine builds the tensor-product second page,
extends each page's differential to all cells by the graded Leibniz rule,
and turns pages by exact homology: new cycles are the preimage of the
target's boundaries, new boundaries are the image of the incoming cycles.

Every cell is a subquotient of its second-page lattice, stored as a pair
of lattices (cycles, boundaries) in the cell's monomial coordinates, so
page turning is pure exact linear algebra and results are reproducible
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

from .algebra import (
    DIVIDED_POWER,
    EXTERIOR,
    Element,
    GradedAlgebraPresentation,
    Monomial,
    basis_in_degree,
)
from .errors import ConsistencyError, ScenarioError
from .grammar import render_element
from .linalg import (
    ExactMatrix,
    Lattice,
    SubquotientInvariants,
    lattice_preimage,
    subquotient,
    subquotient_with_representatives,
)
from .rings import Ring, Scalar

Cell = tuple[int, int]


@dataclass(frozen=True)
class ScenarioFlags:
    divided_power_leibniz: bool = True


@dataclass(frozen=True)
class DifferentialAssignment:
    """d_page(source) = image, with source a single generator class.

    The image lives in the combined fiber-then-base presentation at the
    bidegree forced by the differential, (p + page, q - page + 1); a zero
    image is allowed and is distinct from leaving the class unassigned.
    """

    page: int
    source: Element
    image: Element


@dataclass(frozen=True)
class TargetCohomology:
    """Expected abelian-group invariants per total degree (zero elsewhere)."""

    by_degree: tuple[tuple[int, SubquotientInvariants], ...]

    def get(self, degree: int) -> SubquotientInvariants:
        for d, inv in self.by_degree:
            if d == degree:
                return inv
        return SubquotientInvariants(0, ())


@dataclass(frozen=True)
class Scenario:
    """A complete description of one spectral sequence computation."""

    ring: Ring
    fiber: GradedAlgebraPresentation
    base: GradedAlgebraPresentation
    p_max: int
    q_max: int
    assignments: tuple[DifferentialAssignment, ...] = ()
    target: Optional[TargetCohomology] = None
    flags: ScenarioFlags = ScenarioFlags()
    definitions: tuple[tuple[str, Element], ...] = ()

    def combined(self) -> GradedAlgebraPresentation:
        return _combined_presentation(self.fiber, self.base)

    def validate(self) -> None:
        char = self.ring.characteristic
        self.fiber.validate_for_characteristic(char)
        self.base.validate_for_characteristic(char)
        fiber_names = {g.name for g in self.fiber.generators}
        base_names = {g.name for g in self.base.generators}
        clash = fiber_names & base_names
        if clash:
            raise ScenarioError(f"fiber and base share generator names: {sorted(clash)}")
        if self.p_max < 0 or self.q_max < 0:
            raise ScenarioError("window bounds must be non-negative")
        top = self.base.top_degree()
        if top is not None and self.p_max < top:
            raise ScenarioError(
                f"window p_max={self.p_max} is smaller than the top base degree {top}")
        layout = scenario_layout(self)
        for name, elt in self.definitions:
            if name in fiber_names or name in base_names:
                raise ScenarioError(f"definition {name!r} shadows a generator")
            if elt.presentation != layout.combined or elt.ring != self.ring:
                raise ScenarioError(f"definition {name!r} is not over the scenario algebra")
        for a in self.assignments:
            self._validate_assignment(a, layout)

    def _validate_assignment(self, a: DifferentialAssignment, layout: "E2Layout") -> None:
        label = f"assignment d_{a.page}({render_element(a.source)})"
        if a.page < 2:
            raise ScenarioError(f"{label}: page must be at least 2")
        if a.source.presentation != layout.combined or a.source.ring != self.ring:
            raise ScenarioError(f"{label}: source is not over the scenario algebra")
        if a.image.presentation != layout.combined or a.image.ring != self.ring:
            raise ScenarioError(f"{label}: image is not over the scenario algebra")
        if len(a.source.terms) != 1:
            raise ScenarioError(f"{label}: source must be a single generator class")
        mono, coeff = next(iter(a.source.terms.items()))
        if coeff != self.ring.one():
            raise ScenarioError(f"{label}: source must have coefficient 1")
        support = [(i, e) for i, e in enumerate(mono.exponents) if e]
        if len(support) != 1:
            raise ScenarioError(f"{label}: source must involve exactly one generator")
        idx, power = support[0]
        gen = layout.combined.generators[idx]
        if gen.kind != DIVIDED_POWER and power != 1:
            raise ScenarioError(f"{label}: only divided-power classes may carry an index")
        p, q = layout.bidegree(mono)
        if p > self.p_max or q > self.q_max:
            raise ScenarioError(f"{label}: source bidegree ({p},{q}) is outside the window")
        tp, tq = p + a.page, q - a.page + 1
        if not a.image.is_zero():
            for m in a.image.terms:
                mp, mq = layout.bidegree(m)
                if (mp, mq) != (tp, tq):
                    raise ScenarioError(
                        f"{label}: image term at bidegree ({mp},{mq}), expected ({tp},{tq})")
            if tp > self.p_max or tq < 0 or tq > self.q_max:
                raise ScenarioError(f"{label}: image bidegree ({tp},{tq}) is outside the window")

    def is_reliable(self, p: int, q: int) -> bool:
        """Conservative window reliability: no in-window differential chain
        touching the cell can involve sources or targets outside the window."""
        return p <= self.p_max and q <= self.q_max - self.p_max + 1


@lru_cache(maxsize=None)
def _combined_presentation(fiber: GradedAlgebraPresentation,
                           base: GradedAlgebraPresentation) -> GradedAlgebraPresentation:
    return GradedAlgebraPresentation(fiber.generators + base.generators,
                                     description="fiber (x) base")


class E2Layout:
    """Monomial bookkeeping for the tensor-product second page."""

    def __init__(self, scenario: Scenario):
        self.ring = scenario.ring
        self.fiber = scenario.fiber
        self.base = scenario.base
        self.combined = scenario.combined()
        self.n_fiber = len(scenario.fiber.generators)
        self._cell_cache: dict[Cell, tuple[Monomial, ...]] = {}

    def bidegree(self, mono: Monomial) -> Cell:
        q = sum(e * g.degree for e, g in zip(mono.exponents[: self.n_fiber], self.fiber.generators))
        p = sum(e * g.degree for e, g in zip(mono.exponents[self.n_fiber:], self.base.generators))
        return p, q

    def cell_basis(self, p: int, q: int) -> tuple[Monomial, ...]:
        """Cell basis: fiber-major, lexicographic within each factor."""
        key = (p, q)
        if key not in self._cell_cache:
            if p < 0 or q < 0:
                self._cell_cache[key] = ()
            else:
                fib = basis_in_degree(self.fiber, q)
                bas = basis_in_degree(self.base, p)
                monos = [Monomial(f.exponents + b.exponents) for f in fib for b in bas]
                self._cell_cache[key] = tuple(monos)
        return self._cell_cache[key]

    def to_vector(self, e: Element, p: int, q: int) -> tuple[Scalar, ...]:
        basis = self.cell_basis(p, q)
        index = {m: i for i, m in enumerate(basis)}
        vec = [self.ring.zero()] * len(basis)
        for mono, coeff in e.terms.items():
            if mono not in index:
                bp, bq = self.bidegree(mono)
                raise ConsistencyError(
                    f"element term at bidegree ({bp},{bq}) does not belong to cell ({p},{q})")
            vec[index[mono]] = coeff
        return tuple(vec)

    def to_element(self, vec: Sequence[Scalar], p: int, q: int) -> Element:
        basis = self.cell_basis(p, q)
        return Element(self.ring, self.combined, {m: c for m, c in zip(basis, vec)})


@lru_cache(maxsize=32)
def scenario_layout(scenario: Scenario) -> E2Layout:
    """Shared monomial layout for a scenario (cached)."""
    return E2Layout(scenario)


@dataclass(frozen=True)
class CellState:
    cycles: Lattice
    boundaries: Lattice


@dataclass(frozen=True)
class Page:
    """One page of the spectral sequence inside the window.

    ``cells`` holds only bidegrees whose second-page basis is nonempty;
    ``differentials`` maps each such cell to the matrix of d_r from the
    cell's cycle coordinates to the target cell's cycle coordinates, and
    is populated by ``extend_leibniz``.
    """

    index: int
    cells: dict[Cell, CellState]
    differentials: Optional[dict[Cell, ExactMatrix]] = None


def build_e2(scenario: Scenario) -> Page:
    """The tensor-product second page on the window: full cycles, no boundaries."""
    scenario.validate()
    layout = scenario_layout(scenario)
    ring = scenario.ring
    cells: dict[Cell, CellState] = {}
    for p in range(scenario.p_max + 1):
        for q in range(scenario.q_max + 1):
            basis = layout.cell_basis(p, q)
            if basis:
                n = len(basis)
                cells[(p, q)] = CellState(Lattice.full(ring, n), Lattice.zero(ring, n))
    return Page(2, cells)


def _assignments_for_page(scenario: Scenario, layout: E2Layout, page_index: int):
    """Map (generator index, power) -> image element for this page."""
    assigned: dict[tuple[int, int], Element] = {}
    for a in scenario.assignments:
        if a.page != page_index:
            continue
        mono = next(iter(a.source.terms))
        for i, e in enumerate(mono.exponents):
            if e:
                key = (i, e)
                if key in assigned:
                    raise ScenarioError(
                        f"duplicate assignment for {render_element(a.source)} on page {page_index}")
                assigned[key] = a.image
    return assigned


def _monomial_differential(layout: E2Layout, assigned: dict[tuple[int, int], Element],
                           flags: ScenarioFlags, mono: Monomial) -> Element:
    """Leibniz derivative of one monomial from the generator assignments.

    d(ab) = d(a) b + (-1)^{|a|} a d(b) over the factor blocks in
    presentation order; for even blocks d(g^e) = e g^{e-1} d(g), and for
    divided powers d(gamma_k) = gamma_{k-1} d(gamma_1) when the flag is on
    (an explicit assignment on gamma_k takes precedence).
    """
    combined = layout.combined
    ring = layout.ring
    total = Element.zero(ring, combined)
    prefix_degree = 0
    exps = mono.exponents
    for i, e in enumerate(exps):
        if not e:
            continue
        g = combined.generators[i]
        block: Optional[Element] = None
        if g.kind == DIVIDED_POWER:
            explicit = assigned.get((i, e))
            if explicit is not None:
                block = explicit
            elif flags.divided_power_leibniz:
                first = assigned.get((i, 1))
                if first is not None and not first.is_zero():
                    block = Element.generator(ring, combined, g.name, e - 1) * first
        else:
            val = assigned.get((i, 1))
            if val is not None and not val.is_zero():
                if g.kind == EXTERIOR or e == 1:
                    block = val
                else:
                    block = Element.generator(ring, combined, g.name, e - 1) * val
                    block = block.scale(e)
        if block is None or block.is_zero():
            prefix_degree += e * g.degree
            continue
        prefix = Monomial(tuple(x if j < i else 0 for j, x in enumerate(exps)))
        suffix = Monomial(tuple(x if j > i else 0 for j, x in enumerate(exps)))
        term = Element.from_monomial(ring, combined, prefix) * block
        term = term * Element.from_monomial(ring, combined, suffix)
        if prefix_degree % 2:
            term = -term
        total = total + term
        prefix_degree += e * g.degree
    return total


def chain_differential(scenario: Scenario, page_index: int, e: Element) -> Element:
    """Chain-level page differential of an element in second-page coordinates."""
    layout = scenario_layout(scenario)
    assigned = _assignments_for_page(scenario, layout, page_index)
    total = Element.zero(scenario.ring, layout.combined)
    for mono, coeff in e.terms.items():
        d = _monomial_differential(layout, assigned, scenario.flags, mono)
        if not d.is_zero():
            total = total + d.scale(coeff)
    return total


def _boundaries_in_cycle_coords(state: CellState) -> Lattice:
    cols = []
    for j in range(state.boundaries.rank):
        coords = state.cycles.coords(state.boundaries.basis.column(j))
        if coords is None:
            raise ConsistencyError("boundaries not inside cycles")
        cols.append(coords)
    return Lattice.from_columns(state.cycles.ring, state.cycles.rank, cols)


def extend_leibniz(page: Page, scenario: Scenario) -> dict[Cell, ExactMatrix]:
    """Differential matrices of page ``page.index`` on every in-window cell.

    Raises ConsistencyError when an image fails to be a cycle on this page
    or when boundaries are not carried into boundaries (an ill-defined
    differential, signalling a bad assignment).
    """
    layout = scenario_layout(scenario)
    ring = scenario.ring
    r = page.index
    assigned = _assignments_for_page(scenario, layout, r)
    target_boundary_coords: dict[Cell, Lattice] = {}
    matrices: dict[Cell, ExactMatrix] = {}
    for (p, q) in sorted(page.cells):
        state = page.cells[(p, q)]
        tp, tq = p + r, q - r + 1
        target = page.cells.get((tp, tq))
        target_rank = target.cycles.rank if target is not None else 0
        columns = []
        for j in range(state.cycles.rank):
            vec = state.cycles.basis.column(j)
            elt = layout.to_element(vec, p, q)
            image = chain_differential(scenario, r, elt)
            if image.is_zero():
                columns.append([ring.zero()] * target_rank)
                continue
            if tp > scenario.p_max or tq < 0 or tq > scenario.q_max or target is None:
                raise ConsistencyError(
                    f"page {r}: differential image of a class at ({p},{q}) escapes the "
                    f"window at ({tp},{tq}); enlarge the window")
            image_vec = layout.to_vector(image, tp, tq)
            coords = target.cycles.coords(image_vec)
            if coords is None:
                raise ConsistencyError(
                    f"ill-defined differential: page {r} image of {render_element(elt)} "
                    f"is not a cycle at ({tp},{tq})")
            columns.append(list(coords))
        matrix = ExactMatrix.from_columns(ring, columns, target_rank)
        if target is not None and state.boundaries.rank and not matrix.is_zero():
            if (tp, tq) not in target_boundary_coords:
                target_boundary_coords[(tp, tq)] = _boundaries_in_cycle_coords(target)
            t_bnd = target_boundary_coords[(tp, tq)]
            for j in range(state.boundaries.rank):
                coords = state.cycles.coords(state.boundaries.basis.column(j))
                if coords is None:
                    raise ConsistencyError("boundaries not inside cycles")
                if not t_bnd.contains(matrix.mat_vec(coords)):
                    raise ConsistencyError(
                        f"ill-defined differential: page {r} map at ({p},{q}) does not "
                        f"send boundaries into boundaries")
        matrices[(p, q)] = matrix
    return matrices


def turn_page(page: Page, scenario: Scenario) -> Page:
    """Compute the next page from the extended differentials.

    New cycles at (p,q) are the preimage under d_r of the boundaries at
    (p+r, q-r+1) inside the old cycles; new boundaries add the image of
    the incoming cycles at (p-r, q+r-1).  Cells outside the window are
    untouched (their effect is excluded by the reliability mask).
    """
    if page.differentials is None:
        raise ConsistencyError(f"page {page.index} has no extended differentials")
    r = page.index
    ring = scenario.ring
    mats = page.differentials
    boundary_coord_cache: dict[Cell, Lattice] = {}
    new_cells: dict[Cell, CellState] = {}
    for (p, q) in sorted(page.cells):
        state = page.cells[(p, q)]
        out = mats.get((p, q))
        new_cycles = state.cycles
        if out is not None and out.rows > 0 and not out.is_zero():
            target_key = (p + r, q - r + 1)
            if target_key not in boundary_coord_cache:
                boundary_coord_cache[target_key] = _boundaries_in_cycle_coords(page.cells[target_key])
            pre = lattice_preimage(out, boundary_coord_cache[target_key])
            cols = [state.cycles.basis.mat_vec(pre.basis.column(j)) for j in range(pre.rank)]
            new_cycles = Lattice.from_columns(ring, state.cycles.ambient_rank, cols)
        new_boundaries = state.boundaries
        source_key = (p - r, q + r - 1)
        incoming = mats.get(source_key)
        if incoming is not None and incoming.rows > 0 and not incoming.is_zero():
            cols = [state.cycles.basis.mat_vec(incoming.column(j))
                    for j in range(incoming.cols)]
            image = Lattice.from_columns(ring, state.cycles.ambient_rank, cols)
            new_boundaries = state.boundaries.sum(image)
        if not new_cycles.contains_lattice(new_boundaries):
            raise ConsistencyError(
                f"boundaries not inside cycles at ({p},{q}) turning page {r}; "
                f"the differential assignments are inconsistent")
        if new_cycles == state.cycles and new_boundaries == state.boundaries:
            new_cells[(p, q)] = state
        else:
            new_cells[(p, q)] = CellState(new_cycles, new_boundaries)
    return Page(r + 1, new_cells)


@dataclass(frozen=True)
class AssignmentRecord:
    page: int
    source: str
    image: str
    origin: str
    status: str  # "installed" or "explicit_zero"


@dataclass
class Run:
    """All computed pages of one scenario plus the assignment audit trail."""

    scenario: Scenario
    pages: list[Page]
    records: list[AssignmentRecord]
    origins: dict[int, str] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.pages[-1].index == max(2, self.scenario.p_max + 1)

    @property
    def infinity(self) -> Page:
        return self.pages[-1]

    def page(self, index: int) -> Page:
        for pg in self.pages:
            if pg.index == index:
                return pg
        raise ScenarioError(f"page {index} was not computed (pages run 2..{self.pages[-1].index})")

    def invariants(self, page_index: int, p: int, q: int) -> SubquotientInvariants:
        state = self.page(page_index).cells.get((p, q))
        if state is None:
            return SubquotientInvariants(0, ())
        return subquotient(state.cycles, state.boundaries)

    def representatives(self, page_index: int, p: int, q: int) -> list[str]:
        state = self.page(page_index).cells.get((p, q))
        if state is None:
            return []
        layout = scenario_layout(self.scenario)
        _, reps = subquotient_with_representatives(state.cycles, state.boundaries)
        return [render_element(layout.to_element(v, p, q)) for v in reps]

    def class_survives(self, page_index: int, e: Element) -> bool:
        """True when the element represents a nonzero class on the page."""
        layout = scenario_layout(self.scenario)
        deg = e.homogeneous_degree()
        if deg is None:
            raise ScenarioError("class representatives must be homogeneous and nonzero")
        cell = layout.bidegree(next(iter(e.terms)))
        state = self.page(page_index).cells.get(cell)
        if state is None:
            return False
        vec = layout.to_vector(e, *cell)
        return state.cycles.contains(vec) and not state.boundaries.contains(vec)


def run_to_limit(scenario: Scenario, max_page: Optional[int] = None,
                 origins: Optional[dict[int, str]] = None) -> Run:
    """Run the scenario through page p_max + 1 (all later in-window
    differentials vanish because the base is concentrated in p <= p_max).

    ``origins`` optionally labels assignments (by index) for the audit
    trail, e.g. those emitted by differential transport.
    """
    scenario.validate()
    layout = scenario_layout(scenario)
    last = max(2, scenario.p_max + 1)
    if max_page is not None:
        if max_page < 2:
            raise ScenarioError("max_page must be at least 2")
        last = min(last, max_page)
    page = build_e2(scenario)
    pages = [page]
    records: list[AssignmentRecord] = []
    origin_map = origins or {}
    while page.index < last:
        r = page.index
        for i, a in enumerate(scenario.assignments):
            if a.page != r:
                continue
            mono = next(iter(a.source.terms))
            cell = layout.bidegree(mono)
            state = page.cells.get(cell)
            vec = layout.to_vector(a.source, *cell) if state is not None else None
            if state is None or not state.cycles.contains(vec) or state.boundaries.contains(vec):
                raise ScenarioError(
                    f"assignment d_{r}({render_element(a.source)}): source does not "
                    f"represent a surviving nonzero class on page {r}")
            records.append(AssignmentRecord(
                page=r,
                source=render_element(a.source),
                image=render_element(a.image),
                origin=origin_map.get(i, "scenario"),
                status="explicit_zero" if a.image.is_zero() else "installed",
            ))
        mats = extend_leibniz(page, scenario)
        page = replace(page, differentials=mats)
        pages[-1] = page
        page = turn_page(page, scenario)
        pages.append(page)
    return Run(scenario, pages, records, dict(origin_map))


# -- audits ---------------------------------------------------------------------

@dataclass(frozen=True)
class Survivor:
    p: int
    q: int
    free_rank: int
    torsion: tuple[int, ...]
    representatives: tuple[str, ...]


@dataclass(frozen=True)
class Discrepancy:
    total_degree: int
    expected: SubquotientInvariants
    found_free_rank: int
    found_torsion: tuple[int, ...]
    mode: str  # "exact" or "up_to_extension"
    survivors: tuple[Survivor, ...]


def _reliable_total_degrees(scenario: Scenario) -> list[int]:
    """Degrees n where every potentially nonzero cell with p + q = n is
    reliable, so the sum of limit cells determines the answer in-window."""
    finite_base = scenario.base.top_degree() is not None
    out = []
    for n in range(scenario.p_max + scenario.q_max + 1):
        ok = True
        for q in range(n + 1):
            p = n - q
            if p > scenario.p_max:
                if not finite_base:
                    ok = False
                    break
                continue
            if not scenario.is_reliable(p, q):
                ok = False
                break
        if ok:
            out.append(n)
    return out


def audit_convergence(run: Run, target: TargetCohomology) -> list[Discrepancy]:
    """Compare the limit page against the expected cohomology.

    Degrees where the expected group is torsion-free are compared exactly;
    degrees with torsion on either side are compared up to extension
    (free ranks equal and torsion orders multiplying to the same total).
    Only reliable total degrees are audited.
    """
    scenario = run.scenario
    if not run.complete:
        raise ScenarioError("audit requires a run through the limit page")
    limit = run.infinity
    discrepancies = []
    for n in _reliable_total_degrees(scenario):
        found_rank = 0
        torsion: list[int] = []
        survivors = []
        for q in range(n + 1):
            p = n - q
            if (p, q) not in limit.cells:
                continue
            inv = run.invariants(limit.index, p, q)
            if inv.is_trivial():
                continue
            found_rank += inv.free_rank
            torsion.extend(inv.torsion)
            survivors.append(Survivor(p, q, inv.free_rank, inv.torsion,
                                      tuple(run.representatives(limit.index, p, q))))
        expected = target.get(n)
        found_torsion = tuple(sorted(torsion))
        if not expected.torsion and not found_torsion:
            mode = "exact"
            consistent = expected.free_rank == found_rank
        else:
            mode = "up_to_extension"
            expected_order = 1
            for d in expected.torsion:
                expected_order *= d
            found_order = 1
            for d in found_torsion:
                found_order *= d
            consistent = expected.free_rank == found_rank and expected_order == found_order
        if not consistent:
            discrepancies.append(Discrepancy(n, expected, found_rank, found_torsion,
                                             mode, tuple(survivors)))
    return discrepancies


@dataclass(frozen=True)
class AnnihilatorCandidate:
    page: int
    direction: str  # "in" or "out"
    partner: Cell
    partner_basis: tuple[str, ...]


def annihilator_candidates(run: Run, class_element: Element, page_index: int) -> list[AnnihilatorCandidate]:
    """All in-window differentials that could still move the class.

    Enumerates pages r' >= page_index while the class survives, listing
    nonzero partner cells at (p - r', q + r' - 1) (incoming) and
    (p + r', q - r' + 1) (outgoing).  An empty list proves the class is
    permanent inside the window.
    """
    scenario = run.scenario
    layout = scenario_layout(scenario)
    deg = class_element.homogeneous_degree()
    if deg is None or class_element.is_zero():
        raise ScenarioError("class must be homogeneous and nonzero")
    p, q = layout.bidegree(next(iter(class_element.terms)))
    if not run.class_survives(page_index, class_element):
        died = page_index
        for pg in run.pages:
            if not run.class_survives(pg.index, class_element):
                died = pg.index
                break
        raise ScenarioError(
            f"class {render_element(class_element)} does not survive to page {page_index} "
            f"(dead from page {died})")
    candidates = []
    last_page = run.pages[-1].index
    for r in range(page_index, min(scenario.p_max, last_page) + 1):
        if not run.class_survives(r, class_element):
            break
        for direction, cell in (("in", (p - r, q + r - 1)), ("out", (p + r, q - r + 1))):
            cp, cq = cell
            if cp < 0 or cq < 0 or cp > scenario.p_max or cq > scenario.q_max:
                continue
            inv = run.invariants(r, cp, cq)
            if inv.is_trivial():
                continue
            candidates.append(AnnihilatorCandidate(
                r, direction, cell, tuple(run.representatives(r, cp, cq))))
    return candidates


@dataclass(frozen=True)
class CollapseOutcome:
    collapsed: bool
    page: Optional[int] = None
    cell: Optional[Cell] = None
    matrix: Optional[ExactMatrix] = None
    source_representatives: tuple[str, ...] = ()
    images: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.collapsed:
            return "collapses through window"
        p, q = self.cell
        imgs = "; ".join(f"{s} -> {t}" for s, t in zip(self.source_representatives, self.images))
        return f"first nonzero differential on page {self.page} at ({p},{q}): {imgs}"


@dataclass(frozen=True)
class DifferentialView:
    """A nonzero page differential with rendered class representatives."""

    page: int
    cell: Cell
    target: Cell
    matrix: ExactMatrix
    sources: tuple[str, ...]
    images: tuple[str, ...]


def nonzero_differentials(run: Run) -> list[DifferentialView]:
    """Every differential that is nonzero modulo the target's boundaries,
    scanned by increasing page and then cell order."""
    scenario = run.scenario
    layout = scenario_layout(scenario)
    out = []
    for page in run.pages:
        if page.differentials is None:
            continue
        r = page.index
        for (p, q) in sorted(page.cells):
            matrix = page.differentials.get((p, q))
            if matrix is None or matrix.rows == 0 or matrix.is_zero():
                continue
            target = page.cells[(p + r, q - r + 1)]
            t_bnd = _boundaries_in_cycle_coords(target)
            state = page.cells[(p, q)]
            sources = []
            images = []
            nonzero = False
            for j in range(matrix.cols):
                col = matrix.column(j)
                if not t_bnd.contains(col):
                    nonzero = True
                src = layout.to_element(state.cycles.basis.column(j), p, q)
                img = layout.to_element(target.cycles.basis.mat_vec(col), p + r, q - r + 1)
                sources.append(render_element(src))
                images.append(render_element(img))
            if nonzero:
                out.append(DifferentialView(r, (p, q), (p + r, q - r + 1), matrix,
                                            tuple(sources), tuple(images)))
    return out


def collapse_report(run: Run) -> CollapseOutcome:
    """First nonzero differential (scanning pages then cells in order), or
    collapse when every differential vanishes on reliable cells."""
    scenario = run.scenario
    for view in nonzero_differentials(run):
        if scenario.is_reliable(*view.cell):
            return CollapseOutcome(False, view.page, view.cell, view.matrix,
                                   view.sources, view.images)
    return CollapseOutcome(True)
