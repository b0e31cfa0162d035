"""Exception types shared across the package."""


class ChanMatchError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(ChanMatchError, ValueError):
    """A physical or algorithmic parameter is out of its valid range."""


class InvalidPointError(ChanMatchError, ValueError):
    """A complex value is not a constellation point."""


class FramingError(ChanMatchError, ValueError):
    """Bit/symbol sequence lengths do not match the frame layout."""


class ConstructionError(ChanMatchError, RuntimeError):
    """Code construction failed after the allowed number of retries."""


class EstimationError(ChanMatchError, RuntimeError):
    """A statistical fit had too little data or was singular."""


class ConfigError(ChanMatchError, ValueError):
    """A configuration file or CLI option is malformed."""


class NonConvergenceError(ChanMatchError, RuntimeError):
    """An adaptive numerical scheme failed to reach its target accuracy."""
