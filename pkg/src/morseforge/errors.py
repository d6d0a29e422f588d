"""Exception hierarchy.

Every error raised for a bad input or an out-of-regime computation derives
from :class:`DomainError`; the command-line front end maps those to exit
code 2 and anything else to exit code 1.
"""


class DomainError(Exception):
    """Base class for recoverable, input-related failures."""

    code = "DomainError"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        for key, val in self.details.items():
            out[key] = val
        return out


class DegenerateOrbit(DomainError):
    code = "DegenerateOrbit"


class InvalidStart(DomainError):
    code = "InvalidStart"


class StepTooLarge(DomainError):
    code = "StepTooLarge"


class BranchNotFound(DomainError):
    code = "BranchNotFound"


class SingularPivot(DomainError):
    code = "SingularPivot"


class NonFredholmWeight(DomainError):
    code = "NonFredholmWeight"


class GraphFailure(DomainError):
    code = "GraphFailure"


class ConformalBlowup(DomainError):
    code = "ConformalBlowup"


class NotCoercive(DomainError):
    code = "NotCoercive"


class ContractionFailure(DomainError):
    code = "ContractionFailure"


class ConfigError(DomainError):
    code = "ConfigError"


class NotConverged(DomainError):
    code = "NotConverged"
