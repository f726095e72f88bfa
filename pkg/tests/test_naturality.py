import random

import pytest

from loopss.algebra import Element, Generator, GradedAlgebraPresentation, EXTERIOR, POLYNOMIAL, TRUNCATED
from loopss.engine import DifferentialAssignment, Scenario, run_to_limit, scenario_layout
from loopss.errors import ConsistencyError, ScenarioError
from loopss.grammar import parse_element
from loopss.naturality import (
    FibrationMorphism,
    TransportPair,
    apply_morphism,
    check_naturality,
    induce_on_page,
    run_transported,
    transport_differentials,
    validate_morphism,
)
from loopss.rings import GF, ZZ

from builders import loop_scenario, pair_morphism


@pytest.fixture(scope="module")
def pair2():
    src, dst, morphism, pairs = pair_morphism(2)
    src_run, dst_run = run_transported(src, morphism, pairs, dst)
    return src, dst, morphism, pairs, src_run, dst_run


def test_morphism_kills_the_difference_class(pair2):
    src, dst, morphism, *_ = pair2
    combined = src.combined()
    v = parse_element("c1 - c2", ZZ, combined)
    w = parse_element("c1", ZZ, combined)
    assert apply_morphism(morphism, src, dst, v).is_zero()
    assert apply_morphism(morphism, src, dst, w) == parse_element("x", ZZ, dst.combined())
    assert apply_morphism(morphism, src, dst, parse_element("u", ZZ, combined)) == \
        parse_element("u", ZZ, dst.combined())


def test_morphism_is_multiplicative(pair2):
    src, dst, morphism, *_ = pair2
    layout = scenario_layout(src)
    rng = random.Random(31337)
    monos = []
    for p in range(0, 9):
        for q in range(0, 7):
            monos.extend(layout.cell_basis(p, q))
    for _ in range(100):
        m1, m2 = rng.choice(monos), rng.choice(monos)
        a = Element.from_monomial(ZZ, layout.combined, m1)
        b = Element.from_monomial(ZZ, layout.combined, m2)
        lhs = apply_morphism(morphism, src, dst, a * b)
        rhs = apply_morphism(morphism, src, dst, a) * apply_morphism(morphism, src, dst, b)
        assert lhs == rhs


def test_induced_matrix_on_the_base_row(pair2):
    src, dst, morphism, pairs, src_run, dst_run = pair2
    mats = induce_on_page(morphism, src, dst, src_run.page(2), dst_run.page(2))
    two_zero = mats[(2, 0)]
    assert two_zero.rows == 1 and two_zero.cols == 2
    assert two_zero.entries == ((1, 1),)


def test_transport_emits_zero_and_top(pair2):
    src, dst, morphism, pairs, src_run, _ = pair2
    emitted, origins = transport_differentials(src_run, morphism, pairs, dst)
    assert len(emitted) == 2
    by_page = {a.page: a for a in emitted}
    assert by_page[2].image.is_zero()
    assert by_page[4].image == parse_element("3*u*x^2", ZZ, dst.combined())
    assert set(origins.values()) == {"transport"}


def test_transport_records_in_target_run(pair2):
    *_, dst_run = pair2
    origins = {rec.origin for rec in dst_run.records}
    assert origins == {"transport"}
    statuses = {(rec.page, rec.status) for rec in dst_run.records}
    assert (2, "explicit_zero") in statuses and (4, "installed") in statuses


def test_identity_transport_reproduces_assignments():
    s = loop_scenario(2)
    run = run_to_limit(s)
    combined = s.combined()
    ident = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, combined)),
                   ("y", parse_element("y[1]", ZZ, combined))),
        base_map=(("x", parse_element("x", ZZ, combined)),),
    )
    pairs = tuple(TransportPair(a.source, a.source) for a in s.assignments)
    fresh = Scenario(s.ring, s.fiber, s.base, s.p_max, s.q_max)
    emitted, _ = transport_differentials(run, ident, pairs, fresh)
    assert emitted == s.assignments


def test_transport_twice_along_identity_is_idempotent():
    s = loop_scenario(2)
    run = run_to_limit(s)
    combined = s.combined()
    ident = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, combined)),
                   ("y", parse_element("y[1]", ZZ, combined))),
        base_map=(("x", parse_element("x", ZZ, combined)),),
    )
    pairs = tuple(TransportPair(a.source, a.source) for a in s.assignments)
    fresh = Scenario(s.ring, s.fiber, s.base, s.p_max, s.q_max)
    once, _ = transport_differentials(run, ident, pairs, fresh)
    run_once = run_to_limit(Scenario(s.ring, s.fiber, s.base, s.p_max, s.q_max, once))
    twice, _ = transport_differentials(run_once, ident, pairs, fresh)
    assert twice == once == s.assignments


def test_naturality_holds_on_the_pair(pair2):
    _, _, morphism, _, src_run, dst_run = pair2
    assert check_naturality(src_run, dst_run, morphism) == []


def test_naturality_detects_corrupt_coefficient(pair2):
    src, dst, morphism, pairs, src_run, _ = pair2
    combined = dst.combined()
    corrupted = Scenario(dst.ring, dst.fiber, dst.base, dst.p_max, dst.q_max, (
        DifferentialAssignment(2, parse_element("u", ZZ, combined),
                               parse_element("0", ZZ, combined)),
        DifferentialAssignment(4, parse_element("y[1]", ZZ, combined),
                               parse_element("2*u*x^2", ZZ, combined)),
    ))
    bad_run = run_to_limit(corrupted)
    violations = check_naturality(src_run, bad_run, morphism)
    assert (4, (0, 4)) in violations


def test_zero_morphism_commutes(pair2):
    src, dst, _, _, src_run, dst_run = pair2
    dst_combined = dst.combined()
    zero = FibrationMorphism(
        fiber_map=(("u", parse_element("0", ZZ, dst_combined)),
                   ("y", parse_element("0", ZZ, dst_combined))),
        base_map=(("c1", parse_element("0", ZZ, dst_combined)),
                  ("c2", parse_element("0", ZZ, dst_combined))),
    )
    assert check_naturality(src_run, dst_run, zero) == []


def test_functoriality_with_identity(pair2):
    src, dst, morphism, pairs, src_run, dst_run = pair2
    dst_combined = dst.combined()
    ident_dst = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, dst_combined)),
                   ("y", parse_element("y[1]", ZZ, dst_combined))),
        base_map=(("x", parse_element("x", ZZ, dst_combined)),),
    )
    layout = scenario_layout(src)
    rng = random.Random(99)
    monos = []
    for p in range(0, 9):
        for q in range(0, 7):
            monos.extend(layout.cell_basis(p, q))
    for _ in range(60):
        m = rng.choice(monos)
        e = Element.from_monomial(ZZ, layout.combined, m)
        once = apply_morphism(morphism, src, dst, e)
        twice = apply_morphism(ident_dst, dst, dst, once)
        assert once == twice


def test_morphism_validation_rejects_degree_mismatch(pair2):
    src, dst, *_ = pair2
    dst_combined = dst.combined()
    bad = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, dst_combined)),
                   ("y", parse_element("u", ZZ, dst_combined))),
        base_map=(("c1", parse_element("x", ZZ, dst_combined)),
                  ("c2", parse_element("x", ZZ, dst_combined))),
    )
    with pytest.raises(ScenarioError):
        validate_morphism(bad, src, dst)


def test_morphism_validation_rejects_relation_violation():
    src_base = GradedAlgebraPresentation((Generator("c", 2, TRUNCATED, 4),))
    dst_base = GradedAlgebraPresentation((Generator("x", 2, POLYNOMIAL),))
    fiber = GradedAlgebraPresentation((Generator("u", 1, EXTERIOR),))
    src = Scenario(ZZ, fiber, src_base, 6, 2)
    dst = Scenario(ZZ, fiber, dst_base, 6, 2)
    dst_combined = dst.combined()
    bad = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, dst_combined)),),
        base_map=(("c", parse_element("x", ZZ, dst_combined)),),
    )
    with pytest.raises(ScenarioError) as err:
        validate_morphism(bad, src, dst)
    assert "height" in str(err.value)


def test_transport_over_f3_gives_explicit_zero():
    src, dst, morphism, pairs = pair_morphism(2, GF(3))
    src_run, dst_run = run_transported(src, morphism, pairs, dst)
    by_page = {rec.page: rec for rec in dst_run.records}
    assert by_page[4].status == "explicit_zero"


def test_incompatible_pages_detected():
    # identity between a run where y survives and one where it died: the
    # page-5 image of y is no longer a cycle, signalling inconsistent
    # assignments between the two scenarios
    src = loop_scenario(2, transported=False)
    dst = loop_scenario(2, transported=True)
    src_run = run_to_limit(src)
    dst_run = run_to_limit(dst)
    combined = dst.combined()
    ident = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ZZ, combined)),
                   ("y", parse_element("y[1]", ZZ, combined))),
        base_map=(("x", parse_element("x", ZZ, combined)),),
    )
    with pytest.raises(ConsistencyError):
        induce_on_page(ident, src, dst, src_run.page(5), dst_run.page(5))