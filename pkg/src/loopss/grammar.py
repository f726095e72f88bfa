"""Text grammar for elements: parsing and canonical rendering.

Canonical monomial text lists generator factors in presentation order,
``name^e`` for ordinary powers, ``name[k]`` for the k-th divided power
(so ``u*y[2]*c1^2`` is u times the second divided power of y times c1
squared).  Elements are terms joined with `` + `` / `` - ``; coefficients
are integers or fractions like ``3/2``.

The parser accepts a slightly larger expression language: factors may be
names bound by scenario ``definitions`` and any factor may carry ``^e``;
everything is evaluated exactly and normalized, so parsing is closed over
the rendered form.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping, Optional

from .algebra import DIVIDED_POWER, Element, GradedAlgebraPresentation, Monomial
from .errors import ScenarioError
from .rings import Ring

_TOKEN = re.compile(r"\s*(?:(?P<number>\d+)|(?P<name>[A-Za-z][A-Za-z0-9]*)|(?P<sym>[-+*^/\[\]]))")


class _Parser:
    def __init__(self, text: str, ring: Ring, presentation: GradedAlgebraPresentation,
                 definitions: Optional[Mapping[str, Element]] = None):
        self.text = text
        self.ring = ring
        self.presentation = presentation
        self.definitions = dict(definitions or {})
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._tokenize()
        self.index = 0

    def _tokenize(self) -> None:
        pos = 0
        while pos < len(self.text):
            m = _TOKEN.match(self.text, pos)
            if m is None:
                stripped = self.text[pos:].lstrip()
                if not stripped:
                    break
                raise ScenarioError(
                    f"element parse error at column {pos + 1}: unexpected {stripped[0]!r}")
            if m.group("number") is not None:
                self.tokens.append(("number", m.group("number"), m.start("number")))
            elif m.group("name") is not None:
                self.tokens.append(("name", m.group("name"), m.start("name")))
            else:
                self.tokens.append(("sym", m.group("sym"), m.start("sym")))
            pos = m.end()

    def _peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else (None, None, len(self.text))

    def _next(self):
        tok = self._peek()
        self.index += 1
        return tok

    def _error(self, message: str, pos: int):
        raise ScenarioError(f"element parse error at column {pos + 1}: {message}")

    def parse(self) -> Element:
        total = Element.zero(self.ring, self.presentation)
        expect_term = True
        sign = 1
        while True:
            kind, value, pos = self._peek()
            if kind is None:
                if expect_term:
                    self._error("expected a term", pos)
                break
            if kind == "sym" and value in "+-":
                if expect_term and value == "-":
                    sign = -sign
                    self._next()
                    continue
                if expect_term:
                    self._error("unexpected '+'", pos)
                sign = -1 if value == "-" else 1
                self._next()
                expect_term = True
                continue
            if not expect_term:
                self._error(f"expected '+' or '-', got {value!r}", pos)
            term = self._parse_term()
            if sign < 0:
                term = -term
            total = total + term
            sign = 1
            expect_term = False
        return total

    def _parse_term(self) -> Element:
        factors = [self._parse_factor()]
        while True:
            kind, value, _ = self._peek()
            if kind == "sym" and value == "*":
                self._next()
                factors.append(self._parse_factor())
            else:
                break
        out = Element.one(self.ring, self.presentation)
        for f in factors:
            out = out * f
        return out

    def _parse_factor(self) -> Element:
        kind, value, pos = self._next()
        if kind == "number":
            num = int(value)
            nk, nv, _ = self._peek()
            if nk == "sym" and nv == "/":
                self._next()
                dk, dv, dpos = self._next()
                if dk != "number":
                    self._error("expected a denominator", dpos)
                if int(dv) == 0:
                    self._error("zero denominator", dpos)
                scalar = Fraction(num, int(dv))
            else:
                scalar = num
            try:
                coeff = self.ring.normalize(scalar)
            except (ValueError, ZeroDivisionError) as exc:
                self._error(str(exc), pos)
            return Element.one(self.ring, self.presentation).scale(coeff)
        if kind != "name":
            self._error(f"expected a generator name or number, got {value!r}", pos)
        base = self._resolve_name(value, pos)
        nk, nv, _ = self._peek()
        if nk == "sym" and nv == "[":
            self._next()
            ik, iv, ipos = self._next()
            if ik != "number":
                self._error("expected a divided-power index", ipos)
            ck, cv, cpos = self._next()
            if ck != "sym" or cv != "]":
                self._error("expected ']'", cpos)
            base = self._divided(value, int(iv), pos)
            nk, nv, _ = self._peek()
        if nk == "sym" and nv == "^":
            self._next()
            ek, ev, epos = self._next()
            if ek != "number":
                self._error("expected an exponent", epos)
            return base.power(int(ev))
        return base

    def _resolve_name(self, name: str, pos: int) -> Element:
        if name in self.definitions:
            return self.definitions[name]
        try:
            self.presentation.index_of(name)
        except ScenarioError:
            self._error(f"unknown generator {name!r}", pos)
        return Element.generator(self.ring, self.presentation, name, 1)

    def _divided(self, name: str, index: int, pos: int) -> Element:
        if name in self.definitions:
            self._error(f"divided-power index on defined name {name!r}", pos)
        gi = self.presentation.index_of(name)
        g = self.presentation.generators[gi]
        if g.kind != DIVIDED_POWER:
            self._error(f"{name!r} is not a divided-power generator", pos)
        if index < 0:
            self._error("divided-power index must be non-negative", pos)
        if index == 0:
            return Element.one(self.ring, self.presentation)
        return Element.generator(self.ring, self.presentation, name, index)


def parse_element(text: str, ring: Ring, presentation: GradedAlgebraPresentation,
                  definitions: Optional[Mapping[str, Element]] = None) -> Element:
    """Parse an element expression and return its normal form."""
    return _Parser(text, ring, presentation, definitions).parse()


def render_monomial(mono: Monomial, presentation: GradedAlgebraPresentation) -> str:
    factors = []
    for e, g in zip(mono.exponents, presentation.generators):
        if e == 0:
            continue
        if g.kind == DIVIDED_POWER:
            factors.append(f"{g.name}[{e}]")
        elif e == 1:
            factors.append(g.name)
        else:
            factors.append(f"{g.name}^{e}")
    return "*".join(factors) if factors else "1"


def render_element(e: Element) -> str:
    """Canonical text: terms in descending lexicographic monomial order."""
    if e.is_zero():
        return "0"
    ring = e.ring
    parts = []
    for mono in sorted(e.terms, key=lambda m: m.exponents, reverse=True):
        coeff = ring.render(e.terms[mono])
        parts.append((coeff, render_monomial(mono, e.presentation)))
    out = []
    for coeff, mono in parts:
        negative = coeff.startswith("-")
        mag = coeff[1:] if negative else coeff
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
