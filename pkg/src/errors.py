"""
Exception hierarchy for falconerlab
Every user-facing failure derives from ValidationError so the CLI can map it to exit code 2
"""

from typing import Optional


class LabError(Exception):
    """Root of all falconerlab errors"""


class ValidationError(LabError, ValueError):
    """Input rejected before or during a computation"""


class ShapeError(ValidationError):
    """Matrix or slot dimensions do not fit the operation"""


class UnknownVariableError(ValidationError):
    """A variable name outside the polynomial's universe was requested"""

    def __init__(self, name: str, universe):
        self.name = name
        self.universe = tuple(universe)
        super().__init__(f"variable '{name}' not in universe {list(self.universe)}")


GRAMMAR_HINT = (
    "polynomials use identifiers, integers or decimals, + - * / ^ and parentheses; "
    "'*' may be omitted between a coefficient and a variable, e.g. \"2x*y - 3/2 z^2 + 1\""
)


class PolynomialParseError(ValidationError):
    """Text could not be read as a polynomial with rational coefficients"""

    def __init__(self, text: str, reason: str, hint: str = GRAMMAR_HINT):
        self.text = text
        self.reason = reason
        self.hint = hint
        super().__init__(f"cannot parse polynomial {text!r}: {reason}")


class BudgetExceededError(ValidationError):
    """A brute-force loop would exceed the configured work budget"""

    def __init__(self, required: int, budget: int, what: str = "work", flag: Optional[str] = "--budget"):
        self.required = required
        self.budget = budget
        self.what = what
        message = f"{what} needs {required} evaluations, budget is {budget}"
        if flag:
            message += f"; rerun with {flag} {required} or larger"
        super().__init__(message)


class ClassificationError(ValidationError):
    """The polynomial's verdict does not allow the requested operation"""


class ChainError(ValidationError):
    """A dimension-threshold chain is malformed or has no solution in [0, 1]"""
