"""Exception hierarchy shared by all planner modules."""


class PlannerError(Exception):
    """Base class for every error raised by mopath."""


class ConfigError(PlannerError, ValueError):
    pass


class MapError(PlannerError, ValueError):
    pass


class MapFormatError(MapError):
    """Malformed ASCII grid file."""


class MapRangeError(MapError):
    """Layer values outside their admissible range."""


class GeometryMismatchError(MapError):
    pass


class DuplicateLayerError(MapError):
    pass


class AdjacencyError(PlannerError, ValueError):
    """Two cells that are expected to be 8-neighbours are not."""


class InfeasibleError(PlannerError):
    """No plan can be produced (banned endpoints, unreachable goal, empty domain)."""


class NoPathError(InfeasibleError):
    pass


class BannedEndpointError(InfeasibleError):
    pass


class EmptyDomainError(InfeasibleError):
    pass


class AllTriplesFailedError(InfeasibleError):
    def __init__(self, message, database=None):
        super().__init__(message)
        self.database = database


class ConstraintInfeasibleError(PlannerError):
    pass


class ConfigMismatchError(PlannerError, ValueError):
    pass
