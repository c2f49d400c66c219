"""Exception hierarchy.

``ValidationError`` and its subclasses signal malformed input; everything
under ``MathError`` is a legitimate mathematical outcome (a hypothesis of a
theorem fails on the given data) and carries a structured reason.
"""


class L0Error(Exception):
    """Base class for all library errors."""

    def reason(self):
        return {"error": type(self).__name__, "message": str(self)}


class ValidationError(L0Error, ValueError):
    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.message = message
        self.path = path

    def reason(self):
        out = super().reason()
        if self.path is not None:
            out["path"] = self.path
        return out


class ParseError(ValidationError):
    pass


class AlgebraMismatch(ValidationError):
    pass


class ArityError(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class DimensionUnsupported(ValidationError):
    pass


class DimensionOverflow(ValidationError):
    pass


class RadiusNotStrictlyPositive(ValidationError):
    pass


class MathError(L0Error):
    pass


class NotEnumerable(MathError):
    pass


class NotStable(MathError):
    pass


class NotInSpan(MathError):
    def __init__(self, event):
        super().__init__(f"vector leaves the stable span on atoms {event.atoms().tolist()}")
        self.event = event

    def reason(self):
        return {**super().reason(), "event": [int(i) for i in self.event.atoms()]}


class NotDisjoint(MathError):
    def __init__(self, event):
        super().__init__(f"convex hulls intersect on atoms {event.atoms().tolist()}")
        self.event = event

    def reason(self):
        return {**super().reason(), "event": [int(i) for i in self.event.atoms()]}


class DominationViolated(MathError):
    pass


class NotSublinear(MathError):
    pass


class RateNotContractive(MathError):
    pass


class ContractionViolated(MathError):
    pass


class MaxIterations(MathError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial

    def reason(self):
        return {**super().reason(), "iters": [int(n) for n in self.partial["iters"]]}


class ConstructionImpossible(MathError):
    def __init__(self, message, prefix):
        super().__init__(message)
        self.prefix = prefix

    def reason(self):
        return {**super().reason(), "prefix": self.prefix}


class TranslatorInvalid(MathError):
    pass
