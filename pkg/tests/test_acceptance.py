"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines; every
tolerance here is exact.
"""

import time

import pytest

from loopss.engine import collapse_report, run_to_limit, scenario_layout
from loopss.grammar import parse_element
from loopss.linalg import ExactMatrix
from loopss.rings import GF, ZZ
from loopss.scenarios import PresetId, materialize, run_bundle

from builders import loop_scenario, path_scenario
from conftest import shipped
from oracles import minors_gcd_invariants
from properties import (
    run_graded_algebra_laws,
    run_leibniz_and_dd,
    run_naturality_on_pair,
    run_permutation_invariance,
    run_report_determinism,
    run_subquotient_oracle,
    run_turn_page_oracle,
)


def _pair_run(n, ring=ZZ):
    bundle = materialize(PresetId("pair_with_morphism", n=n, ring=ring))
    return bundle, run_bundle(bundle)


def test_acceptance_1_non_collapse():
    started = time.monotonic()
    for n in (1, 2, 3, 4):
        bundle, result = _pair_run(n)
        dst = result.run.scenario
        combined = dst.combined()
        source_class = parse_element("y[1]", ZZ, combined)
        top = [a for a in dst.assignments if a.page == 2 * n and a.source == source_class]
        assert len(top) == 1, f"n={n}: expected one transported top assignment"
        expected = parse_element(f"{n + 1}*u*x^{n}", ZZ, combined)
        image = top[0].image
        assert image == expected or image == -expected, f"n={n}: wrong transported image"
        assert not image.is_zero()
        outcome = collapse_report(result.run)
        assert not outcome.collapsed, f"n={n}: must not collapse"
        assert outcome.page == 2 * n and outcome.cell == (0, 2 * n), f"n={n}: wrong first differential"
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"runtime budget exceeded: {elapsed:.1f}s"
    print(f"\nACCEPTANCE 1 free-loop non-collapse (n=1..4, {elapsed:.2f}s): PASS")


def test_acceptance_2_path_fibration_convergence():
    from loopss.engine import audit_convergence

    for n in (2, 3, 4):
        bundle = materialize(PresetId("path_cpn_diag", n=n))
        run = run_to_limit(bundle.scenario)
        assert audit_convergence(run, bundle.scenario.target) == [], f"n={n}: audit not clean"
        third = run.page(3)
        stable = run.page(2 * n)
        assert third.cells == stable.cells, f"n={n}: third page differs from page {2 * n}"
    print("\nACCEPTANCE 2 path-fibration convergence (n=2..4): PASS")


def test_acceptance_3_third_page_contents():
    for n in (2, 3):
        bundle = materialize(PresetId("path_cpn_diag", n=n))
        run = run_to_limit(bundle.scenario)
        scenario = bundle.scenario
        for p in range(0, scenario.p_max + 1):
            inv = run.invariants(3, p, 0)
            if p % 2 == 0 and p <= 2 * n:
                assert (inv.free_rank, inv.torsion) == (1, ()), (n, p)
            else:
                assert inv.is_trivial(), (n, p)
        for p in range(0, 2 * n + 1):
            inv = run.invariants(3, p, 1)
            if p == 2 * n:
                assert (inv.free_rank, inv.torsion) == (1, ()), n
            else:
                assert inv.is_trivial(), (n, p)
        reps = run.representatives(3, 2 * n, 1)
        assert len(reps) == 1
        combined = scenario.combined()
        rep = parse_element(reps[0], ZZ, combined)
        symmetric = parse_element(
            " + ".join(f"u*c1^{n - i}*c2^{i}" for i in range(n + 1)), ZZ, combined)
        state = run.page(3).cells[(2 * n, 1)]
        layout = scenario_layout(scenario)
        diff_plus = layout.to_vector(rep - symmetric, 2 * n, 1)
        diff_minus = layout.to_vector(rep + symmetric, 2 * n, 1)
        assert state.boundaries.contains(diff_plus) or state.boundaries.contains(diff_minus), \
            f"n={n}: representative differs from the symmetric class modulo boundaries"
        if n > 1:
            assert run.invariants(3, 2, 2 * n - 1).is_trivial(), n
    print("\nACCEPTANCE 3 third-page contents (n=2,3): PASS")


def test_acceptance_4_characteristic_p():
    for n, p, collapses in [(2, 3, True), (3, 2, True), (2, 2, False), (2, 5, False), (3, 3, False)]:
        bundle, result = _pair_run(n, ring=GF(p))
        outcome = collapse_report(result.run)
        assert outcome.collapsed == collapses, (n, p)
        if not collapses:
            assert outcome.page == 2 * n and outcome.cell == (0, 2 * n), (n, p)
    print("\nACCEPTANCE 4 characteristic-p behaviour ((2,3),(3,2) collapse; (2,2),(2,5),(3,3) do not): PASS")


def test_acceptance_5_torsion_witness():
    bundle, result = _pair_run(2)
    run = result.run
    limit = run.infinity.index
    inv41 = run.invariants(limit, 4, 1)
    assert (inv41.free_rank, inv41.torsion) == (0, (3,))
    inv21 = run.invariants(limit, 2, 1)
    assert (inv21.free_rank, inv21.torsion) == (1, ())
    # the page-4 differential matrix is (3); its invariant factors are hand
    # checkable and confirmed by the independent minors-gcd oracle
    matrix = run.page(4).differentials[(0, 4)]
    assert matrix == ExactMatrix.from_rows(ZZ, [[3]])
    assert minors_gcd_invariants([[3]]) == (0, (3,))
    print("\nACCEPTANCE 5 torsion witness (Z/3 at (4,1), Z at (2,1)): PASS")


def test_acceptance_6_rational_rank_one():
    for m, k in [(1, 2), (2, 2), (1, 3), (4, 2)]:
        bundle = materialize(PresetId("free_loop_rank_one", m=m, k=k))
        run = run_to_limit(bundle.scenario)
        outcome = collapse_report(run)
        assert not outcome.collapsed, (m, k)
        assert outcome.page == 2 * m * (k - 1), (m, k)
        assert outcome.cell == (0, 2 * m * k - 2), (m, k)
    print("\nACCEPTANCE 6 rational rank-one generalization ((1,2),(2,2),(1,3),(4,2)): PASS")


def test_acceptance_7_property_suites():
    run_graded_algebra_laws()
    path2 = run_to_limit(path_scenario(2))
    loop2 = run_to_limit(loop_scenario(2))
    run_leibniz_and_dd([path2, loop2])
    run_turn_page_oracle([path_scenario(1)])
    run_subquotient_oracle()
    bundle = materialize(PresetId("pair_with_morphism", n=2))
    result = run_bundle(bundle)
    run_naturality_on_pair((result.source_run, result.run), bundle.morphism)
    run_report_determinism(shipped("free_loop_cpn_2.json"))
    run_permutation_invariance([path_scenario(2), loop_scenario(2)])
    print("\nACCEPTANCE 7 property suites (algebra laws, Leibniz/dd, page-turn oracle, "
          "subquotient oracle, naturality, report determinism, permutation invariance): PASS")
