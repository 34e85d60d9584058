"""Exception hierarchy for solver contracts and aborts"""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition"""


class TraceTooShort(ContractViolation):
    """Rate estimation was asked to fit fewer records than it needs"""


class SolverAbort(RuntimeError):
    """
    A run could not continue

    Raised when the prox map returns a nonfinite point or when backtracking
    exceeds its hard cap.
    """

    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(message)
        self.diagnostic = diagnostic


class InvariantViolation(AssertionError):
    """A convergence invariant failed during a run in strict mode"""
