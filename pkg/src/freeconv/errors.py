"""Exception hierarchy shared by all modules.

The command line maps these onto its exit-code contract: parse failures
exit 2, domain/precondition failures exit 3, numerical non-convergence
exits 4.
"""


class FreeconvError(Exception):
    """Base class for all library errors."""


class ParseError(FreeconvError, ValueError):
    """Malformed input text: JSON schema violations, bad word syntax."""


class DomainError(FreeconvError, ValueError):
    """Input outside an operation's mathematical domain or precondition."""


class ConvergenceError(FreeconvError, RuntimeError):
    """An iterative or adaptive numerical procedure failed to converge."""
