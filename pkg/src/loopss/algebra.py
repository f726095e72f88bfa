"""Graded-commutative algebras with exterior, polynomial, truncated and
divided-power generators.

Monomials are exponent vectors in a fixed generator order; a divided-power
exponent k stands for the k-th divided power of that generator, never for
the k-th ordinary power.  Elements are finite linear combinations with
exact coefficients and no stored zeros.  All values are immutable and all
operations are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Optional, Sequence

from .errors import AlgebraError, NotABasisError, ScenarioError
from .linalg import ExactMatrix, rank, solve_columns
from .rings import Ring, Scalar

EXTERIOR = "exterior"
POLYNOMIAL = "polynomial"
TRUNCATED = "truncated"
DIVIDED_POWER = "divided_power"

KINDS = (EXTERIOR, POLYNOMIAL, TRUNCATED, DIVIDED_POWER)


@dataclass(frozen=True)
class Generator:
    """A single algebra generator with its degree and kind."""

    name: str
    degree: int
    kind: str
    height: Optional[int] = None  # truncation bound, only for TRUNCATED

    def __post_init__(self):
        if not self.name or not self.name[0].isalpha() or not self.name.isalnum():
            raise ScenarioError(f"generator name {self.name!r} must be alphanumeric and start with a letter")
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown generator kind {self.kind!r}")
        if self.degree < 1:
            raise ScenarioError(f"generator {self.name}: degree must be positive")
        if self.kind == TRUNCATED:
            if self.height is None or self.height < 2:
                raise ScenarioError(f"generator {self.name}: truncated kind needs height >= 2")
        elif self.height is not None:
            raise ScenarioError(f"generator {self.name}: height only applies to truncated generators")

    def exponent_bound(self) -> Optional[int]:
        """Exclusive upper bound on exponents, None when unbounded."""
        if self.kind == EXTERIOR:
            return 2
        if self.kind == TRUNCATED:
            return self.height
        return None


@dataclass(frozen=True)
class GradedAlgebraPresentation:
    """An ordered list of generators presenting a graded-commutative algebra."""

    generators: tuple[Generator, ...]
    description: str = ""

    def __post_init__(self):
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ScenarioError("generator names must be unique within a presentation")

    def validate_for_characteristic(self, characteristic: int) -> None:
        """Parity rules: odd squares vanish by graded commutativity, so only
        exterior generators may be odd, and only in characteristic != 2 is
        that forced."""
        for g in self.generators:
            if g.kind == EXTERIOR:
                if g.degree % 2 == 0 and characteristic != 2:
                    raise ScenarioError(
                        f"generator {g.name}: exterior generators must have odd degree "
                        f"(or the scenario must use characteristic 2)")
            else:
                if g.degree % 2 == 1 and characteristic != 2:
                    raise ScenarioError(
                        f"generator {g.name}: {g.kind} generators must have even degree")

    def index_of(self, name: str) -> int:
        for i, g in enumerate(self.generators):
            if g.name == name:
                return i
        raise ScenarioError(f"unknown generator {name!r}")

    def top_degree(self) -> Optional[int]:
        """Largest degree with a nonzero component, or None when unbounded."""
        total = 0
        for g in self.generators:
            bound = g.exponent_bound()
            if bound is None:
                return None
            total += (bound - 1) * g.degree
        return total

    def unit_monomial(self) -> "Monomial":
        return Monomial((0,) * len(self.generators))


@dataclass(frozen=True)
class Monomial:
    """Normal-form product of generator powers, stored as an exponent vector."""

    exponents: tuple[int, ...]

    def degree(self, presentation: GradedAlgebraPresentation) -> int:
        return sum(e * g.degree for e, g in zip(self.exponents, presentation.generators))

    def is_unit(self) -> bool:
        return all(e == 0 for e in self.exponents)


def _koszul_sign(a: tuple[int, ...], b: tuple[int, ...], odd: tuple[bool, ...]) -> int:
    """Sign from moving the factors of b into place across the factors of a."""
    swaps = 0
    for j, bj in enumerate(b):
        if not bj or not odd[j]:
            continue
        for i in range(j + 1, len(a)):
            if a[i] and odd[i]:
                swaps += a[i] * bj
    return -1 if swaps % 2 else 1


def _multiply_monomials(m1: Monomial, m2: Monomial, presentation: GradedAlgebraPresentation):
    """Return (integer structure constant, Monomial) or (0, None) if the
    product is annihilated by an exterior square or a truncation bound."""
    gens = presentation.generators
    odd = tuple(g.degree % 2 == 1 for g in gens)
    coeff = _koszul_sign(m1.exponents, m2.exponents, odd)
    out = []
    for e1, e2, g in zip(m1.exponents, m2.exponents, gens):
        e = e1 + e2
        bound = g.exponent_bound()
        if bound is not None and e >= bound:
            return 0, None
        if g.kind == DIVIDED_POWER and e1 and e2:
            coeff *= comb(e1 + e2, e1)
        out.append(e)
    return coeff, Monomial(tuple(out))


class Element:
    """A finite linear combination of monomials over one presentation."""

    __slots__ = ("ring", "presentation", "terms")

    def __init__(self, ring: Ring, presentation: GradedAlgebraPresentation,
                 terms: Optional[dict[Monomial, Scalar]] = None):
        self.ring = ring
        self.presentation = presentation
        clean: dict[Monomial, Scalar] = {}
        for mono, coeff in (terms or {}).items():
            c = ring.normalize(coeff)
            if not ring.is_zero(c):
                clean[mono] = c
        self.terms = dict(sorted(clean.items(), key=lambda kv: kv[0].exponents))

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, ring: Ring, presentation: GradedAlgebraPresentation) -> "Element":
        return cls(ring, presentation)

    @classmethod
    def one(cls, ring: Ring, presentation: GradedAlgebraPresentation) -> "Element":
        return cls(ring, presentation, {presentation.unit_monomial(): ring.one()})

    @classmethod
    def from_monomial(cls, ring: Ring, presentation: GradedAlgebraPresentation,
                      mono: Monomial, coeff: Scalar = 1) -> "Element":
        return cls(ring, presentation, {mono: coeff})

    @classmethod
    def generator(cls, ring: Ring, presentation: GradedAlgebraPresentation,
                  name: str, power: int = 1) -> "Element":
        """The class of a single generator power (a divided index for
        divided-power generators)."""
        idx = presentation.index_of(name)
        g = presentation.generators[idx]
        bound = g.exponent_bound()
        if power < 0 or (bound is not None and power >= bound):
            return cls.zero(ring, presentation)
        exps = [0] * len(presentation.generators)
        exps[idx] = power
        return cls(ring, presentation, {Monomial(tuple(exps)): ring.one()})

    # -- structure ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def homogeneous_degree(self) -> Optional[int]:
        """The common degree of all monomials, or None (zero or mixed)."""
        degrees = {m.degree(self.presentation) for m in self.terms}
        if len(degrees) == 1:
            return degrees.pop()
        return None

    # -- arithmetic -----------------------------------------------------------

    def _check_compatible(self, other: "Element") -> None:
        if self.presentation != other.presentation or self.ring != other.ring:
            raise AlgebraError("presentation mismatch between elements")

    def __add__(self, other: "Element") -> "Element":
        self._check_compatible(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = self.ring.add(out.get(mono, self.ring.zero()), coeff)
        return Element(self.ring, self.presentation, out)

    def __neg__(self) -> "Element":
        return Element(self.ring, self.presentation,
                       {m: self.ring.neg(c) for m, c in self.terms.items()})

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def scale(self, scalar: Scalar) -> "Element":
        s = self.ring.normalize(scalar)
        return Element(self.ring, self.presentation,
                       {m: self.ring.mul(c, s) for m, c in self.terms.items()})

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other, self.presentation)

    def power(self, n: int) -> "Element":
        if n < 0:
            raise AlgebraError("negative powers are not defined")
        out = Element.one(self.ring, self.presentation)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, Element) and self.ring == other.ring
                and self.presentation == other.presentation and self.terms == other.terms)

    def __hash__(self):
        return hash((self.ring, self.presentation, tuple(self.terms.items())))

    def __repr__(self):
        from .grammar import render_element
        return f"Element({render_element(self)})"


def multiply(a: Element, b: Element, presentation: GradedAlgebraPresentation) -> Element:
    """Graded-commutative product in normal form.

    Reordering two odd-degree factors contributes a Koszul -1; exterior
    squares and truncation overflows vanish; divided powers multiply with
    binomial structure constants.
    """
    if a.presentation != presentation or b.presentation != presentation:
        raise AlgebraError("presentation mismatch in multiply")
    a._check_compatible(b)
    ring = a.ring
    out: dict[Monomial, Scalar] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            structure, mono = _multiply_monomials(m1, m2, presentation)
            if mono is None:
                continue
            coeff = ring.mul(ring.mul(c1, c2), ring.normalize(structure))
            out[mono] = ring.add(out.get(mono, ring.zero()), coeff)
    return Element(ring, presentation, out)


@lru_cache(maxsize=None)
def basis_in_degree(presentation: GradedAlgebraPresentation, degree: int) -> tuple[Monomial, ...]:
    """All normal-form monomials of the given degree, ordered
    lexicographically by exponent vector with the highest leading exponent
    first (the same order elements render their terms in)."""
    if degree < 0:
        raise AlgebraError("degree must be non-negative")
    gens = presentation.generators

    def extend(i: int, remaining: int, prefix: tuple[int, ...]):
        if i == len(gens):
            if remaining == 0:
                yield prefix
            return
        g = gens[i]
        bound = g.exponent_bound()
        e_max = remaining // g.degree
        if bound is not None:
            e_max = min(e_max, bound - 1)
        for e in range(e_max + 1):
            yield from extend(i + 1, remaining - e * g.degree, prefix + (e,))

    monos = sorted(extend(0, degree, ()), reverse=True)
    return tuple(Monomial(t) for t in monos)


def element_to_vector(e: Element, basis: Sequence[Monomial]) -> tuple[Scalar, ...]:
    index = {m: i for i, m in enumerate(basis)}
    vec = [e.ring.zero()] * len(basis)
    for mono, coeff in e.terms.items():
        if mono not in index:
            raise AlgebraError(f"monomial {mono} outside the given basis")
        vec[index[mono]] = coeff
    return tuple(vec)



@dataclass(frozen=True)
class BasisExpression:
    """An element rewritten as a polynomial in named alternative generators."""

    names: tuple[str, ...]
    degrees: tuple[int, ...]
    terms: tuple[tuple[tuple[int, ...], Scalar], ...]  # sorted ascending by exponent

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, new_gens: Sequence[Element]) -> Element:
        """Substitute the defining elements back in; inverse of the rewrite."""
        if len(new_gens) != len(self.names):
            raise AlgebraError("generator count mismatch in evaluate")
        if not new_gens:
            raise AlgebraError("cannot evaluate an expression with no generators")
        ring = new_gens[0].ring
        presentation = new_gens[0].presentation
        total = Element.zero(ring, presentation)
        for exps, coeff in self.terms:
            term = Element.one(ring, presentation)
            for g, e in zip(new_gens, exps):
                if e:
                    term = term * g.power(e)
            total = total + term.scale(coeff)
        return total

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, coeff in self.terms:
            factors = []
            for name, e in zip(self.names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mono = "*".join(factors) if factors else "1"
            parts.append((coeff, mono))
        return _join_terms(parts)


def _join_terms(parts) -> str:
    out = []
    for coeff, mono in parts:
        text = str(coeff)
        negative = text.startswith("-")
        mag = text[1:] if negative else text
        if mag == "1" and mono != "1":
            body = mono
        elif mono == "1":
            body = mag
        else:
            body = f"{mag}*{mono}"
        if not out:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f"- {body}" if negative else f"+ {body}")
    return " ".join(out)


def change_basis_express(e: Element, new_gens: Sequence[Element],
                         names: Optional[Sequence[str]] = None) -> BasisExpression:
    """Rewrite ``e`` as a polynomial in the given alternative generators.

    Validated degree by degree: in every degree occupied by ``e``, the
    products of the new generators must span the full component (rank
    comparison), otherwise NotABasisError is raised.  Over Z the rewrite
    must be integral.  The round trip through ``evaluate`` returns ``e``.
    """
    ring = e.ring
    presentation = e.presentation
    if not new_gens:
        raise AlgebraError("need at least one new generator")
    gen_names = tuple(names) if names is not None else tuple(f"g{i}" for i in range(len(new_gens)))
    if len(gen_names) != len(new_gens):
        raise AlgebraError("names/generators length mismatch")
    degrees = []
    for g in new_gens:
        if g.presentation != presentation or g.ring != ring:
            raise AlgebraError("presentation mismatch in change_basis_express")
        d = g.homogeneous_degree()
        if d is None or d < 1:
            raise AlgebraError("new generators must be homogeneous of positive degree")
        degrees.append(d)

    by_degree: dict[int, dict[Monomial, Scalar]] = {}
    for mono, coeff in e.terms.items():
        by_degree.setdefault(mono.degree(presentation), {})[mono] = coeff

    collected: dict[tuple[int, ...], Scalar] = {}
    for d, terms in sorted(by_degree.items()):
        component = Element(ring, presentation, terms)
        basis = basis_in_degree(presentation, d)
        exponent_choices = []
        for gd, g in zip(degrees, new_gens):
            cap = d // gd
            if gd % 2 == 1:
                cap = min(cap, 1)  # odd squares vanish
            exponent_choices.append(range(cap + 1))
        candidates = [exps for exps in itertools.product(*exponent_choices)
                      if sum(x * gd for x, gd in zip(exps, degrees)) == d]
        candidates.sort()
        columns = []
        for exps in candidates:
            prod = Element.one(ring, presentation)
            for g, x in zip(new_gens, exps):
                if x:
                    prod = prod * g.power(x)
            columns.append(list(element_to_vector(prod, basis)))
        matrix = ExactMatrix.from_columns(ring, columns, len(basis))
        if rank(matrix) < len(basis):
            raise NotABasisError(f"not a basis in window: degree {d} component is not spanned")
        solution = solve_columns(matrix, element_to_vector(component, basis))
        if solution is None:
            raise AlgebraError(
                f"element is not an integral combination of the new generators in degree {d}")
        for exps, coeff in zip(candidates, solution):
            if not ring.is_zero(coeff):
                collected[exps] = ring.add(collected.get(exps, ring.zero()), coeff)

    terms = tuple(sorted(((exps, c) for exps, c in collected.items() if not ring.is_zero(c)),
                         key=lambda kv: kv[0]))
    return BasisExpression(gen_names, tuple(degrees), terms)
