"""Exception types shared across the engine.

Every error carries enough data to be rendered as a machine-readable
record by the command line front end (see ``as_record``).
"""


class ThemeError(Exception):
    code = "error"

    def as_record(self):
        return {"code": self.code, "message": str(self)}


class NonInvertible(ThemeError):
    code = "non_invertible"


class Obstruction(ThemeError):
    """A coefficient that must vanish for a solution to exist does not.

    ``degree`` is the power of b where the obstruction sits and ``value``
    the offending coefficient.  Nonexistence is a result, not a failure.
    """

    code = "obstruction"

    def __init__(self, degree, value, where=None):
        self.degree = degree
        self.value = value
        self.where = where
        msg = f"obstruction at b^{degree}: coefficient {value}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)

    def as_record(self):
        rec = {"code": self.code, "degree": self.degree, "value": str(self.value)}
        if self.where:
            rec["where"] = self.where
        return rec


class PrecisionExhausted(ThemeError):
    code = "precision_exhausted"


class NotInImage(ThemeError):
    code = "not_in_image"


class NotATheme(ThemeError):
    code = "not_a_theme"


class InvalidPresentation(ThemeError):
    code = "invalid_presentation"


class DeltaTooSmall(ThemeError):
    code = "delta_too_small"


class ShiftTooNegative(ThemeError):
    code = "shift_too_negative"


class WrongRank(ThemeError):
    code = "wrong_rank"


class RankJump(ThemeError):
    code = "rank_jump"


class ParseError(ThemeError):
    code = "parse_error"

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)

    def as_record(self):
        rec = super().as_record()
        rec["position"] = self.position
        return rec


class AmbiguousNormalization(ParseError):
    """A ``log(s)^j`` factor with j >= 2 and no ``/j!`` marker.

    Both readings are attached; neither is chosen.
    """

    code = "ambiguous_normalization"

    def __init__(self, message, readings, position=None):
        self.readings = readings
        super().__init__(message, position)

    def as_record(self):
        rec = super().as_record()
        rec["readings"] = self.readings
        return rec
