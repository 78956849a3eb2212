"""Exception hierarchy shared by all causaloid modules."""


class CausaloidError(Exception):
    """Base class for all library errors."""


class ForeignRegionError(CausaloidError):
    """A region or stack from one model was used with another model."""


class CompressionViolationError(CausaloidError):
    """A composite fiducial set could not be chosen inside the product of the
    component fiducial sets.  Signals inconsistent input tables."""


class IdentityPreconditionError(CausaloidError):
    """An Omega-set product condition required by a composition identity does
    not hold."""


class ClumpingError(CausaloidError):
    """No valid decomposition of a region into clumps was found; the region
    would require a higher-order Lambda matrix that is not stored."""


class ZeroConditioningError(CausaloidError):
    """The conditioning r-vector of a query is zero."""


class UnconditionableError(CausaloidError):
    """No spanning preparation gives the conditioning event nonzero weight."""


class NonlinearEvolutionError(CausaloidError):
    """A fitted evolution map left a residual above tolerance."""


class GateSetError(CausaloidError):
    """A program uses a setting outside the computer's gate set."""


class ModelFileError(CausaloidError):
    """A model, query, or foliation file failed validation.

    ``code`` is a stable machine-readable identifier (e.g.
    ``GATE_NOT_STOCHASTIC``); ``location`` names the offending field.
    """

    def __init__(self, code: str, message: str, location: str = ""):
        self.code = code
        self.location = location
        super().__init__(f"{code}: {message}" + (f" (at {location})" if location else ""))
