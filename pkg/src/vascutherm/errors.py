"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the CLI can emit
error JSON without string matching.
"""


class VascuthermError(Exception):
    code = "error"


class InvalidArgumentError(VascuthermError, ValueError):
    code = "invalid-argument"


class DegenerateElementError(InvalidArgumentError):
    code = "degenerate-element"


class SnapFailureError(VascuthermError):
    code = "snap-failure"


class InletNotOnBoundaryError(VascuthermError):
    code = "inlet-not-on-boundary"


class ConflictingConstraintError(VascuthermError):
    code = "conflicting-constraint"


class ValidationError(VascuthermError):
    """Raised by :func:`vascutherm.model.validate`; ``issues`` lists every violation."""

    code = "validation"

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues)
        super().__init__(f"{len(self.issues)} validation issue(s): {lines}")


class SolverError(VascuthermError):
    code = "solver"


class SingularSystemError(SolverError):
    code = "singular-system"


class NoConvergenceError(SolverError):
    code = "no-convergence"

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class NonphysicalIterateError(SolverError):
    code = "nonphysical-iterate"


class WrongRegimeError(VascuthermError, ValueError):
    code = "wrong-regime"


class ConfigError(VascuthermError):
    code = "parse"

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
