"""Coefficient rings: the integers, the rationals and prime fields.

Every scalar handled by the engine is exact: arbitrary-precision ``int``
over Z and F_p (F_p scalars are kept reduced into ``[0, p)``), and
``fractions.Fraction`` in lowest terms over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar, Union

from .errors import ScenarioError

Scalar = Union[int, Fraction]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class IntegerRing:
    """The ring Z of arbitrary-precision integers."""

    name: ClassVar[str] = "Z"
    is_field: ClassVar[bool] = False
    characteristic: ClassVar[int] = 0

    def normalize(self, x) -> int:
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise ValueError(f"{x} is not an integer")
            return int(x)
        if not isinstance(x, int) or isinstance(x, bool):
            raise ValueError(f"{x!r} is not an integer scalar")
        return x

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def is_zero(self, a) -> bool:
        return a == 0

    def one(self) -> int:
        return 1

    def zero(self) -> int:
        return 0

    def render(self, a) -> str:
        return str(a)

    def parse(self, text: str) -> int:
        return self.normalize(int(text))


@dataclass(frozen=True)
class RationalField:
    """The field Q; scalars are ``Fraction`` values in lowest terms."""

    name: ClassVar[str] = "Q"
    is_field: ClassVar[bool] = True
    characteristic: ClassVar[int] = 0

    def normalize(self, x) -> Fraction:
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            return Fraction(x)
        raise ValueError(f"{x!r} is not a rational scalar")

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inverse(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return Fraction(1) / a

    def is_zero(self, a) -> bool:
        return a == 0

    def one(self) -> Fraction:
        return Fraction(1)

    def zero(self) -> Fraction:
        return Fraction(0)

    def render(self, a) -> str:
        f = Fraction(a)
        if f.denominator == 1:
            return str(f.numerator)
        return f"{f.numerator}/{f.denominator}"

    def parse(self, text: str) -> Fraction:
        return self.normalize(Fraction(text))


@dataclass(frozen=True)
class PrimeField:
    """The field F_p for a prime p; scalars are ints reduced into [0, p)."""

    p: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ScenarioError(f"F_{self.p}: modulus must be prime")

    is_field: ClassVar[bool] = True

    @property
    def name(self) -> str:
        return f"F{self.p}"

    @property
    def characteristic(self) -> int:
        return self.p

    def normalize(self, x) -> int:
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ZeroDivisionError(f"denominator of {x} vanishes mod {self.p}")
            return (x.numerator * pow(x.denominator, -1, self.p)) % self.p
        if not isinstance(x, int) or isinstance(x, bool):
            raise ValueError(f"{x!r} is not an F_{self.p} scalar")
        return x % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inverse(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.p)

    def is_zero(self, a) -> bool:
        return a % self.p == 0

    def one(self) -> int:
        return 1

    def zero(self) -> int:
        return 0

    def render(self, a) -> str:
        return str(a % self.p)

    def parse(self, text: str) -> int:
        return self.normalize(int(text))


Ring = Union[IntegerRing, RationalField, PrimeField]

ZZ = IntegerRing()
QQ = RationalField()


def GF(p: int) -> PrimeField:
    return PrimeField(p)


def ring_from_name(name: str) -> Ring:
    """Parse a ring name: ``Z``, ``Q`` or ``F<p>`` with p prime."""
    if name == "Z":
        return ZZ
    if name == "Q":
        return QQ
    if name.startswith("F") and name[1:].isdigit():
        return PrimeField(int(name[1:]))
    raise ScenarioError(f"unknown coefficient ring {name!r} (expected Z, Q or F<p>)")
