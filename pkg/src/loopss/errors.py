"""Exception hierarchy shared across the engine."""


class LoopssError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(LoopssError):
    """A scenario document or preset request is malformed or inconsistent.

    Raised for parse errors, semantic errors (bad bidegrees, unknown
    generators, invalid windows) and invalid preset parameters.  The CLI
    maps this to exit code 2.
    """


class ConsistencyError(LoopssError):
    """The engine detected an internal contradiction while computing.

    Typical causes: a differential assignment whose Leibniz extension does
    not square to zero, so boundaries escape cycles, or an image that is
    not a cycle on its page.  The CLI maps this to exit code 3.
    """


class AlgebraError(LoopssError):
    """Misuse of graded-algebra operations (presentation mismatch, etc.)."""


class NotABasisError(AlgebraError):
    """Proposed generators fail to span a degree component ("not a basis in window")."""
