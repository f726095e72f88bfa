"""The randomized property suites, callable both from topic test modules
and from the acceptance gate.  All randomness uses fixed seeds."""

from __future__ import annotations

import random
from math import factorial

from loopss.algebra import (
    DIVIDED_POWER,
    EXTERIOR,
    TRUNCATED,
    Element,
    Generator,
    GradedAlgebraPresentation,
    basis_in_degree,
)
from loopss.engine import (
    Scenario,
    chain_differential,
    collapse_report,
    run_to_limit,
    scenario_layout,
)
from loopss.grammar import parse_element
from loopss.linalg import Lattice, subquotient
from loopss.naturality import check_naturality
from loopss.rings import ZZ

import oracles


def run_graded_algebra_laws(seed: int = 20240) -> None:
    rng = random.Random(seed)
    p = GradedAlgebraPresentation((
        Generator("a", 1, EXTERIOR), Generator("b", 3, EXTERIOR),
        Generator("y", 2, DIVIDED_POWER), Generator("c", 2, TRUNCATED, 4),
    ))
    monos = []
    for d in range(0, 8):
        monos.extend(basis_in_degree(p, d))
    for _ in range(200):
        m1, m2, m3 = (rng.choice(monos) for _ in range(3))
        a = Element.from_monomial(ZZ, p, m1)
        b = Element.from_monomial(ZZ, p, m2)
        c = Element.from_monomial(ZZ, p, m3)
        assert (a * b) * c == a * (b * c)
        sign = -1 if (m1.degree(p) % 2) and (m2.degree(p) % 2) else 1
        assert a * b == (b * a).scale(sign)
    for i, j, k in [(1, 1, 1), (1, 2, 3), (2, 2, 1)]:
        gi = Element.generator(ZZ, p, "y", i)
        gj = Element.generator(ZZ, p, "y", j)
        gk = Element.generator(ZZ, p, "y", k)
        coeff = factorial(i + j + k) // (factorial(i) * factorial(j) * factorial(k))
        assert (gi * gj) * gk == Element.generator(ZZ, p, "y", i + j + k).scale(coeff)
        assert gi * (gj * gk) == (gi * gj) * gk


def run_leibniz_and_dd(runs, seed: int = 20241) -> None:
    rng = random.Random(seed)
    for run in runs:
        scenario = run.scenario
        layout = scenario_layout(scenario)
        monos = []
        for p in range(0, scenario.p_max + 1):
            for q in range(0, min(scenario.q_max, 8) + 1):
                monos.extend(layout.cell_basis(p, q))
        pages = [pg.index for pg in run.pages if pg.differentials is not None]
        for r in pages:
            for _ in range(40):
                m1, m2 = rng.choice(monos), rng.choice(monos)
                a = Element.from_monomial(scenario.ring, layout.combined, m1)
                b = Element.from_monomial(scenario.ring, layout.combined, m2)
                lhs = chain_differential(scenario, r, a * b)
                sign = -1 if sum(layout.bidegree(m1)) % 2 else 1
                rhs = chain_differential(scenario, r, a) * b \
                    + (a * chain_differential(scenario, r, b)).scale(sign)
                assert lhs == rhs
        for page in run.pages:
            if page.differentials is None:
                continue
            r = page.index
            for (p, q), mat in page.differentials.items():
                nxt = page.differentials.get((p + r, q - r + 1))
                if nxt is None or mat.rows == 0 or nxt.rows == 0:
                    continue
                assert nxt.mul(mat).is_zero()


def run_turn_page_oracle(scenarios) -> None:
    for scenario in scenarios:
        run = run_to_limit(scenario)
        layout = scenario_layout(scenario)
        width = sum(len(layout.cell_basis(p, q)) for (p, q) in run.pages[0].cells)
        assert width <= 40, "oracle windows are capped at 40 basis elements"
        for page, nxt in zip(run.pages, run.pages[1:]):
            expected = oracles.naive_next_page_invariants(scenario, page)
            for cell, (free, torsion) in expected.items():
                inv = run.invariants(nxt.index, *cell)
                assert (inv.free_rank, inv.torsion) == (free, torsion)


def run_subquotient_oracle(seed: int = 20242) -> None:
    rng = random.Random(seed)
    checked = 0
    while checked < 15:
        k = rng.randint(1, 3)
        rows = [[rng.randint(-4, 4) for _ in range(k)] for _ in range(k)]
        free, torsion = oracles.minors_gcd_invariants(rows)
        if free != 0:
            continue
        order = 1
        for d in torsion:
            order *= d
        if order > 40:
            continue
        C = Lattice.full(ZZ, k)
        B = Lattice.from_columns(ZZ, k, [tuple(rows[i][j] for i in range(k)) for j in range(k)])
        inv = subquotient(C, B)
        assert (inv.free_rank, inv.torsion) == (free, torsion)
        enumerated = oracles.group_order_counts_from_enumeration(rows)
        claimed = oracles.order_counts_from_invariants(inv.torsion, order)
        assert enumerated == claimed
        checked += 1


def run_naturality_on_pair(pair_runs, morphism) -> None:
    src_run, dst_run = pair_runs
    assert check_naturality(src_run, dst_run, morphism) == []


def run_report_determinism(scenario_text: str) -> None:
    from loopss.report import build_report, report_to_json
    from loopss.scenarios import parse_scenario, run_bundle

    first = report_to_json(build_report(run_bundle(parse_scenario(scenario_text))))
    second = report_to_json(build_report(run_bundle(parse_scenario(scenario_text))))
    assert first == second


def _permuted(scenario: Scenario) -> Scenario:
    """Same scenario with generator orders reversed inside fiber and base."""
    fiber = GradedAlgebraPresentation(tuple(reversed(scenario.fiber.generators)),
                                      scenario.fiber.description)
    base = GradedAlgebraPresentation(tuple(reversed(scenario.base.generators)),
                                     scenario.base.description)
    from loopss.grammar import render_element

    shell = Scenario(scenario.ring, fiber, base, scenario.p_max, scenario.q_max)
    combined = shell.combined()
    assignments = tuple(
        type(a)(a.page,
                parse_element(render_element(a.source), scenario.ring, combined),
                parse_element(render_element(a.image), scenario.ring, combined))
        for a in scenario.assignments
    )
    return Scenario(scenario.ring, fiber, base, scenario.p_max, scenario.q_max,
                    assignments, scenario.target, scenario.flags)


def run_permutation_invariance(scenarios) -> None:
    for scenario in scenarios:
        original = collapse_report(run_to_limit(scenario))
        permuted = collapse_report(run_to_limit(_permuted(scenario)))
        assert original.collapsed == permuted.collapsed
        assert original.page == permuted.page
        assert original.cell == permuted.cell
