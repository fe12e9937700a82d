"""Exception types shared across the package."""


class TabsketchError(Exception):
    """Base class for failures the library reports deliberately."""


class DataError(TabsketchError):
    """A dataset could not be ingested or violates its invariants."""


class QuotaError(TabsketchError):
    """A per-class sample quota cannot be computed for the requested strategy."""


class BackendError(TabsketchError):
    """Base class for prediction-backend failures."""


class BridgeLaunchError(BackendError):
    """The bridge child process could not be started."""


class BridgeTimeoutError(BackendError):
    """The bridge child process did not answer within its time budget."""


class BridgeProtocolError(BackendError):
    """The bridge response line was missing, unparsable, or ill-shaped."""


class BridgeLabelError(BackendError):
    """The bridge returned labels outside the declared class range."""


class BridgeRemoteError(BackendError):
    """The bridge answered with an explicit error payload."""
