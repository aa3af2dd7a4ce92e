"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class TubeFormulaError(Exception):
    exit_code = 3


class DomainError(TubeFormulaError, ValueError):
    """Argument outside the domain of a numerical operation."""


class GeometryError(TubeFormulaError, ValueError):
    """Invalid polygon or profile data."""


class HypothesisViolation(TubeFormulaError, ValueError):
    """The tube formula is only valid for eps < h."""


class PoleProximityError(TubeFormulaError):
    def __init__(self, message, point=None, magnitude=None):
        super().__init__(message)
        self.point = point
        self.magnitude = magnitude


class CoincidenceError(TubeFormulaError):
    """An integer pole coincides with a complex dimension."""


class SearchError(TubeFormulaError):
    """Root search failed to converge."""


class AccuracyError(TubeFormulaError):
    """A quadrature failed its refinement check."""


class UnsupportedConfigurationError(TubeFormulaError):
    pass


class TilingConsistencyError(TubeFormulaError):
    pass


class ResourceError(TubeFormulaError):
    exit_code = 4


class ConfigError(TubeFormulaError, ValueError):
    exit_code = 2

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
