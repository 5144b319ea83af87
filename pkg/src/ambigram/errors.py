"""Exception and warning types raised across the package."""


class AmbigramError(Exception):
    """Base class for all package errors."""


class MissingGlyph(AmbigramError, KeyError):
    pass


class MalformedFont(AmbigramError):
    pass


class UnsupportedSvgFeature(AmbigramError, ValueError):
    pass


class ShapeMismatch(AmbigramError, ValueError):
    pass


class DimensionMismatch(AmbigramError, ValueError):
    pass


class TopologyMismatch(AmbigramError, ValueError):
    pass


class EmptyImage(AmbigramError, ValueError):
    pass


class AppliedToAsymmetricTask(AmbigramError, ValueError):
    pass


class BackendFailure(AmbigramError, RuntimeError):
    pass


class NonFiniteGradient(AmbigramError, FloatingPointError):
    pass


class MissingPair(AmbigramError, KeyError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(f"{a}{b}" for a, b in self.missing[:20])
        more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
        super().__init__(f"{len(self.missing)} letter pair(s) missing: {shown}{more}")

    def __str__(self):
        return self.args[0]


class MissingDesign(AmbigramError, KeyError):
    def __init__(self, words):
        self.words = list(words)
        super().__init__(f"no design for {len(self.words)} word(s): {', '.join(self.words[:20])}")

    def __str__(self):
        return self.args[0]


class OcrFailure(AmbigramError, RuntimeError):
    pass


class ConfigError(AmbigramError, ValueError):
    pass


class DegeneratePath(UserWarning):
    """A path covers less than one pixel of area at the requested resolution."""
