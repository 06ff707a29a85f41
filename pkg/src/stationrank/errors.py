"""Exception hierarchy shared across the pipeline."""


class StationRankError(Exception):
    """Base class for all pipeline errors."""


# --- ingest ---------------------------------------------------------------

class UnreadableSource(StationRankError):
    pass


class MissingColumns(StationRankError):
    def __init__(self, missing, available=None):
        self.missing = sorted(missing)
        self.available = sorted(available) if available else []
        super().__init__(f"missing required columns: {', '.join(self.missing)}")


class EmptyInput(StationRankError):
    pass


# --- trajectory -----------------------------------------------------------

class StateAmbiguity(StationRankError):
    """A single discretization step would span more than one state."""


class DegenerateTrip(StationRankError):
    """All stops of the trip share one timestamp; no dynamics to discretize."""


# --- graph ----------------------------------------------------------------

class EmptyDay(StationRankError):
    pass


class NoEdges(StationRankError):
    pass


# --- markov ---------------------------------------------------------------

class ZeroRow(StationRankError):
    def __init__(self, rows):
        self.rows = list(rows)
        super().__init__(f"rows with zero out-weight: {self.rows[:10]}")


class NotIrreducible(StationRankError):
    pass


class NoConvergence(StationRankError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"stationary solve did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class SolverFailure(StationRankError):
    pass


class SingularSystem(StationRankError):
    pass


# --- perturb --------------------------------------------------------------

class NoSuchEdge(StationRankError):
    pass


class NoSuchEdges(StationRankError):
    pass


class IsolatedTarget(StationRankError):
    pass


# --- risk / aggregate -----------------------------------------------------

class IncompleteSweep(StationRankError):
    pass


class NoSuccessfulDays(StationRankError):
    pass


# --- cli / service --------------------------------------------------------

class UnknownStation(StationRankError):
    pass


class DayUnavailable(StationRankError):
    pass


class AggregateMissing(StationRankError):
    pass
