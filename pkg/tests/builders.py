"""Hand-built scenarios used by the engine tests.

These are constructed from first principles here (independently of the
preset library) so the engine tests do not lean on the code they help to
pin down.
"""

from __future__ import annotations

from loopss.algebra import (
    DIVIDED_POWER,
    EXTERIOR,
    POLYNOMIAL,
    TRUNCATED,
    Element,
    Generator,
    GradedAlgebraPresentation,
)
from loopss.engine import DifferentialAssignment, Scenario, TargetCohomology
from loopss.grammar import parse_element
from loopss.linalg import SubquotientInvariants
from loopss.rings import ZZ, Ring


def presentation(*gens) -> GradedAlgebraPresentation:
    return GradedAlgebraPresentation(tuple(gens))


def cpn_target(n: int) -> TargetCohomology:
    return TargetCohomology(tuple((2 * i, SubquotientInvariants(1, ())) for i in range(n + 1)))


def path_scenario(n: int, ring: Ring = ZZ, include_top: bool = True,
                  q_max: int | None = None) -> Scenario:
    """Evaluation fibration over CP^n x CP^n: loop-space fiber, two-factor base."""
    fiber = presentation(Generator("u", 1, EXTERIOR), Generator("y", 2 * n, DIVIDED_POWER))
    base = presentation(Generator("c1", 2, TRUNCATED, n + 1), Generator("c2", 2, TRUNCATED, n + 1))
    scenario = Scenario(ring, fiber, base, 4 * n, q_max if q_max is not None else 6 * n)
    combined = scenario.combined()
    assignments = [
        DifferentialAssignment(2, parse_element("u", ring, combined),
                               parse_element("c1 - c2", ring, combined)),
    ]
    if include_top:
        image = " + ".join(f"u*c1^{n - i}*c2^{i}" for i in range(n + 1))
        assignments.append(DifferentialAssignment(2 * n, parse_element("y[1]", ring, combined),
                                                  parse_element(image, ring, combined)))
    return Scenario(ring, fiber, base, scenario.p_max, scenario.q_max,
                    tuple(assignments), cpn_target(n))


def loop_scenario(n: int, ring: Ring = ZZ, transported: bool = True) -> Scenario:
    """Free-loop style fibration over CP^n with optionally installed
    transported differentials (an explicit zero on page 2 and the page-2n
    image (n+1) u x^n)."""
    fiber = presentation(Generator("u", 1, EXTERIOR), Generator("y", 2 * n, DIVIDED_POWER))
    base = presentation(Generator("x", 2, TRUNCATED, n + 1))
    scenario = Scenario(ring, fiber, base, 2 * n, 4 * n + 1)
    combined = scenario.combined()
    assignments = ()
    if transported:
        assignments = (
            DifferentialAssignment(2, parse_element("u", ring, combined),
                                   parse_element("0", ring, combined)),
            DifferentialAssignment(2 * n, parse_element("y[1]", ring, combined),
                                   parse_element(f"{n + 1}*u*x^{n}", ring, combined)),
        )
    return Scenario(ring, fiber, base, scenario.p_max, scenario.q_max, assignments)


def pair_morphism(n: int, ring: Ring = ZZ):
    """Evaluation-to-diagonal morphism: identity on the fiber, both base
    classes to the single target class."""
    from loopss.naturality import FibrationMorphism, TransportPair

    src = path_scenario(n, ring)
    dst = loop_scenario(n, ring, transported=False)
    dst_combined = dst.combined()
    src_combined = src.combined()
    morphism = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ring, dst_combined)),
                   ("y", parse_element("y[1]", ring, dst_combined))),
        base_map=(("c1", parse_element("x", ring, dst_combined)),
                  ("c2", parse_element("x", ring, dst_combined))),
    )
    pairs = (
        TransportPair(parse_element("u", ring, src_combined),
                      parse_element("u", ring, dst_combined)),
        TransportPair(parse_element("y[1]", ring, src_combined),
                      parse_element("y[1]", ring, dst_combined)),
    )
    return src, dst, morphism, pairs


def inconsistent_scenario() -> Scenario:
    """Assignments whose Leibniz extension has a nonzero square.

    d_2(a) = s and d_2(c) = a*s give d_2(d_2(c)) = s^2 != 0 (s has height
    3), so boundaries escape cycles when page 2 turns.
    """
    fiber = presentation(Generator("a", 1, EXTERIOR), Generator("c", 2, POLYNOMIAL))
    base = presentation(Generator("s", 2, TRUNCATED, 3))
    scenario = Scenario(ZZ, fiber, base, 4, 4)
    combined = scenario.combined()
    assignments = (
        DifferentialAssignment(2, parse_element("a", ZZ, combined),
                               parse_element("s", ZZ, combined)),
        DifferentialAssignment(2, parse_element("c", ZZ, combined),
                               parse_element("a*s", ZZ, combined)),
    )
    return Scenario(ZZ, fiber, base, 4, 4, assignments)
