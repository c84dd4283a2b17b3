"""Exception types raised across the package."""


class BnradError(Exception):
    """Base class for computational errors (CLI exit code 1)."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class InvalidRadius(BnradError):
    code = "InvalidRadius"


class ParseError(BnradError):
    code = "ParseError"

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position

    def to_dict(self):
        d = super().to_dict()
        d["position"] = self.position
        return d


class DomainError(BnradError):
    code = "DomainError"


class HypothesisViolation(BnradError):
    code = "HypothesisViolation"


class NonFinite(BnradError):
    code = "NonFinite"


class QuadratureFailure(BnradError):
    code = "QuadratureFailure"


class GridMismatch(BnradError):
    code = "GridMismatch"


class BlowUp(BnradError):
    code = "BlowUp"

    def __init__(self, message, location):
        super().__init__(message)
        self.location = location

    def to_dict(self):
        d = super().to_dict()
        d["location"] = self.location
        return d


class StiffnessFailure(BnradError):
    code = "StiffnessFailure"


class BracketFailure(BnradError):
    code = "BracketFailure"


class NotASolution(BnradError):
    code = "NotASolution"


class ZeroFunction(BnradError):
    code = "ZeroFunction"


class ValidityWarning(UserWarning):
    """A closed form was requested outside the range where it was derived."""
