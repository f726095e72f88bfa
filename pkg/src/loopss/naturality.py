"""Morphisms of spectral sequences induced by maps of fibrations.

A fibration morphism is a pair of degree-preserving generator-wise algebra
maps (fiber and base).  On second pages it acts as the tensor product of
the two maps; on later pages it descends to subquotients, which is checked
cell by cell.  Known differentials transport from source to target along
the morphism: d'_r(target class) = phi(d_r(source class)).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .algebra import DIVIDED_POWER, EXTERIOR, TRUNCATED, Element
from .engine import (
    DifferentialAssignment,
    Page,
    Run,
    Scenario,
    run_to_limit,
    scenario_layout,
)
from .errors import ConsistencyError, ScenarioError
from .grammar import render_element
from .linalg import ExactMatrix, Lattice


@dataclass(frozen=True)
class FibrationMorphism:
    """Generator-wise images: source fiber generators land in the target
    fiber algebra, source base generators in the target base algebra."""

    fiber_map: tuple[tuple[str, Element], ...]
    base_map: tuple[tuple[str, Element], ...]

    def image_of(self, name: str) -> Element:
        for n, e in self.fiber_map + self.base_map:
            if n == name:
                return e
        raise ScenarioError(f"morphism does not map generator {name!r}")


@dataclass(frozen=True)
class TransportPair:
    """Declares that the target class is the morphism image of the source
    class, so the source's differentials transport to it."""

    source: Element
    target: Element


def _split_purity(scenario: Scenario, e: Element, want_fiber: bool) -> bool:
    layout = scenario_layout(scenario)
    for mono in e.terms:
        p, q = layout.bidegree(mono)
        if want_fiber and p != 0:
            return False
        if not want_fiber and q != 0:
            return False
    return True


def _divided_image_form(e: Element):
    """A divided-power generator may map only to a multiple of the first
    divided power of a divided-power generator (or to zero)."""
    if e.is_zero():
        return None
    if len(e.terms) != 1:
        raise ScenarioError("divided-power generators must map to a single divided-power class")
    mono, coeff = next(iter(e.terms.items()))
    support = [(i, x) for i, x in enumerate(mono.exponents) if x]
    if len(support) != 1:
        raise ScenarioError("divided-power generators must map to a single divided-power class")
    idx, power = support[0]
    gen = e.presentation.generators[idx]
    if gen.kind != DIVIDED_POWER or power != 1:
        raise ScenarioError("divided-power generators must map to a first divided power")
    return coeff, gen.name


def validate_morphism(m: FibrationMorphism, src: Scenario, dst: Scenario) -> None:
    """Check totality, degree preservation, bidegree purity and relations."""
    if src.ring != dst.ring:
        raise ScenarioError("morphism requires matching coefficient rings")
    dst_layout = scenario_layout(dst)
    mapped = {n for n, _ in m.fiber_map} | {n for n, _ in m.base_map}
    for gens, images, is_fiber in ((src.fiber.generators, dict(m.fiber_map), True),
                                   (src.base.generators, dict(m.base_map), False)):
        for g in gens:
            if g.name not in images:
                raise ScenarioError(f"morphism misses generator {g.name!r}")
            img = images[g.name]
            if img.presentation != dst_layout.combined or img.ring != dst.ring:
                raise ScenarioError(f"image of {g.name!r} is not over the target algebra")
            if not img.is_zero():
                if img.homogeneous_degree() != g.degree:
                    raise ScenarioError(f"image of {g.name!r} does not preserve degree")
                if not _split_purity(dst, img, is_fiber):
                    side = "fiber" if is_fiber else "base"
                    raise ScenarioError(f"image of {g.name!r} must stay in the target {side}")
            if g.kind == EXTERIOR and not (img * img).is_zero():
                raise ScenarioError(f"image of exterior {g.name!r} does not square to zero")
            if g.kind == TRUNCATED and not img.power(g.height).is_zero():
                raise ScenarioError(f"image of {g.name!r} violates the height-{g.height} relation")
            if g.kind == DIVIDED_POWER:
                _divided_image_form(img)
    src_names = {g.name for g in src.fiber.generators} | {g.name for g in src.base.generators}
    unknown = mapped - src_names
    if unknown:
        raise ScenarioError(f"morphism maps unknown generators: {sorted(unknown)}")


def apply_morphism(m: FibrationMorphism, src: Scenario, dst: Scenario, e: Element) -> Element:
    """Multiplicative extension of the generator images to any element."""
    src_layout = scenario_layout(src)
    dst_layout = scenario_layout(dst)
    ring = dst.ring
    out = Element.zero(ring, dst_layout.combined)
    for mono, coeff in e.terms.items():
        term = Element.one(ring, dst_layout.combined)
        for i, power in enumerate(mono.exponents):
            if not power:
                continue
            g = src_layout.combined.generators[i]
            img = m.image_of(g.name)
            if g.kind == DIVIDED_POWER:
                form = _divided_image_form(img)
                if form is None:
                    term = Element.zero(ring, dst_layout.combined)
                    break
                scalar, target_name = form
                factor = ring.one()
                for _ in range(power):
                    factor = ring.mul(factor, scalar)
                block = Element.generator(ring, dst_layout.combined, target_name, power).scale(factor)
            else:
                block = img.power(power)
            term = term * block
            if term.is_zero():
                break
        out = out + term.scale(coeff)
    return out


def induce_on_page(m: FibrationMorphism, src: Scenario, dst: Scenario,
                   src_page: Page, dst_page: Page) -> dict[tuple[int, int], ExactMatrix]:
    """Cellwise matrices of the induced map on a common page index.

    The chain-level tensor map must send cycles to cycles and boundaries
    to boundaries on this page; otherwise the differential assignments of
    the two scenarios are inconsistent with the morphism.
    """
    if src_page.index != dst_page.index:
        raise ScenarioError("induce_on_page needs equal page indices")
    src_layout = scenario_layout(src)
    dst_layout = scenario_layout(dst)
    ring = dst.ring
    out: dict[tuple[int, int], ExactMatrix] = {}
    for (p, q), state in sorted(src_page.cells.items()):
        if p > dst.p_max or q > dst.q_max:
            continue
        dst_state = dst_page.cells.get((p, q))
        dst_rank = dst_state.cycles.rank if dst_state is not None else 0
        columns = []
        for j in range(state.cycles.rank):
            vec = state.cycles.basis.column(j)
            image = apply_morphism(m, src, dst, src_layout.to_element(vec, p, q))
            if image.is_zero():
                columns.append([ring.zero()] * dst_rank)
                continue
            if dst_state is None:
                raise ConsistencyError(
                    f"morphism not compatible with pages: nonzero image in empty cell ({p},{q})")
            coords = dst_state.cycles.coords(dst_layout.to_vector(image, p, q))
            if coords is None:
                raise ConsistencyError(
                    f"morphism not compatible with pages: image at ({p},{q}) is not a cycle "
                    f"on page {src_page.index}")
            columns.append(list(coords))
        matrix = ExactMatrix.from_columns(ring, columns, dst_rank)
        if dst_state is not None and state.boundaries.rank and not matrix.is_zero():
            bnd_coords = []
            for j in range(dst_state.boundaries.rank):
                c = dst_state.cycles.coords(dst_state.boundaries.basis.column(j))
                bnd_coords.append(c)
            dst_bnd = Lattice.from_columns(ring, dst_rank, bnd_coords)
            for j in range(state.boundaries.rank):
                coords = state.cycles.coords(state.boundaries.basis.column(j))
                if coords is None or not dst_bnd.contains(matrix.mat_vec(coords)):
                    raise ConsistencyError(
                        f"morphism not compatible with pages: boundaries escape at ({p},{q})")
        out[(p, q)] = matrix
    return out


def transport_differentials(src_run: Run, m: FibrationMorphism,
                            pairs: Sequence[TransportPair],
                            dst: Scenario) -> tuple[tuple[DifferentialAssignment, ...], dict[int, str]]:
    """Assignments for the target induced by the source's assignments.

    For every declared pair and every page where the source class has an
    installed assignment, emits d_r(target) = phi(image); images that
    vanish are emitted as explicit zeros so the audit trail distinguishes
    them from unassigned classes.
    """
    src = src_run.scenario
    validate_morphism(m, src, dst)
    emitted = []
    origins: dict[int, str] = {}
    base_index = len(dst.assignments)
    for pair in pairs:
        for a in src.assignments:
            if a.source != pair.source:
                continue
            if not src_run.class_survives(a.page, pair.source):
                raise ScenarioError(
                    f"transport source {render_element(pair.source)} died before page {a.page}")
            image = apply_morphism(m, src, dst, a.image)
            emitted.append(DifferentialAssignment(a.page, pair.target, image))
            origins[base_index + len(emitted) - 1] = "transport"
    return tuple(emitted), origins


def run_transported(src: Scenario, m: FibrationMorphism, pairs: Sequence[TransportPair],
                    dst: Scenario, max_page: Optional[int] = None) -> tuple[Run, Run]:
    """Run the source, transport its differentials, then run the target."""
    src_run = run_to_limit(src)
    transported, origins = transport_differentials(src_run, m, pairs, dst)
    enriched = replace(dst, assignments=dst.assignments + transported)
    dst_run = run_to_limit(enriched, max_page=max_page, origins=origins)
    return src_run, dst_run


def check_naturality(src_run: Run, dst_run: Run, m: FibrationMorphism) -> list[tuple[int, tuple[int, int]]]:
    """Verify phi d = d' phi as matrices on all reliable common cells.

    Returns the (page, cell) pairs where commutation fails, empty on
    success; comparisons are made modulo the target's boundaries, i.e. as
    maps of page classes.
    """
    src, dst = src_run.scenario, dst_run.scenario
    validate_morphism(m, src, dst)
    violations = []
    last = min(src_run.pages[-1].index, dst_run.pages[-1].index)
    ring = dst.ring
    for r in range(2, last):
        src_page = src_run.page(r)
        dst_page = dst_run.page(r)
        if src_page.differentials is None or dst_page.differentials is None:
            continue
        phi = induce_on_page(m, src, dst, src_page, dst_page)
        for (p, q), phi_here in sorted(phi.items()):
            if not (src.is_reliable(p, q) and dst.is_reliable(p, q)):
                continue
            tp, tq = p + r, q - r + 1
            if tp > min(src.p_max, dst.p_max) or tq < 0 or tq > min(src.q_max, dst.q_max):
                continue
            phi_target = phi.get((tp, tq))
            d_src = src_page.differentials.get((p, q))
            d_dst = dst_page.differentials.get((p, q))
            dst_target = dst_page.cells.get((tp, tq))
            target_rank = dst_target.cycles.rank if dst_target is not None else 0
            n_src = phi_here.cols
            left = ExactMatrix.zeros(ring, target_rank, n_src)
            if phi_target is not None and d_src is not None and d_src.rows:
                left = phi_target.mul(d_src)
            right = ExactMatrix.zeros(ring, target_rank, n_src)
            if d_dst is not None and d_dst.rows:
                right = d_dst.mul(phi_here)
            if left == right:
                continue
            if dst_target is None:
                violations.append((r, (p, q)))
                continue
            bnd_cols = []
            for j in range(dst_target.boundaries.rank):
                bnd_cols.append(dst_target.cycles.coords(dst_target.boundaries.basis.column(j)))
            dst_bnd = Lattice.from_columns(ring, target_rank, bnd_cols)
            ok = True
            for j in range(n_src):
                diff = [ring.add(a, ring.neg(b)) for a, b in zip(left.column(j), right.column(j))]
                if not dst_bnd.contains(diff):
                    ok = False
                    break
            if not ok:
                violations.append((r, (p, q)))
    return violations
