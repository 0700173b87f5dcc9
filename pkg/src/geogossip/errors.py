"""Exception hierarchy shared by all modules."""


class GossipError(Exception):
    """Base class for every error raised by geogossip."""


class InvalidSizeError(GossipError, ValueError):
    pass


class InvalidRadiusError(GossipError, ValueError):
    pass


class DegenerateGeometryError(GossipError, ValueError):
    """Two nodes share a position, so Voronoi cells are undefined."""


class InvalidParameterError(GossipError, ValueError):
    pass


class InvalidTopologyError(GossipError, ValueError):
    pass


class InvalidMatrixError(GossipError, ValueError):
    pass


class NoSpectralGapError(GossipError, ValueError):
    pass


class DegeneratePolicyError(GossipError, RuntimeError):
    """Acceptance probability is zero or the query safety cap was hit."""


class ProtocolError(GossipError, RuntimeError):
    """A gossip round could not be executed (e.g. isolated node drawn)."""


class UndefinedErrorMetric(GossipError, ValueError):
    """Normalized error requested for an all-zero initial vector."""


class NotConvergedError(GossipError, RuntimeError):
    """The averaging-time condition was not met within ``max_ticks``.

    ``last_fraction`` is the fraction of trials still at or above epsilon at
    the final checkpoint.
    """

    def __init__(self, message, last_fraction):
        super().__init__(message)
        self.last_fraction = last_fraction
