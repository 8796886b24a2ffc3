"""Exception taxonomy shared by all modules."""


class AlflabError(Exception):
    """Base class for all package errors."""


class ConfigError(AlflabError):
    """Invalid configuration data (parameters out of range, bad point sets)."""


class DomainError(AlflabError):
    """Evaluation point violates a domain precondition (clearance, chart range)."""


class GaugeError(AlflabError):
    """Evaluation point lies inside an excluded Dirac-string cone."""


class ShapeError(AlflabError):
    """Array input has the wrong shape or fails a structural invariant."""


class DefiniteError(AlflabError):
    """A 2-form triple is not definite enough to determine a metric."""


class PositivityError(AlflabError):
    """A quantity required to be positive (harmonic factor, metric) is not."""


class FrameError(AlflabError):
    """A point cannot be expressed in the coordinate frame an operation needs."""


class FitError(AlflabError):
    """A least-squares fit is degenerate or of unacceptable quality."""
