"""Exception types shared across the package."""


class AuctionError(ValueError):
    """Base class for all domain errors raised by this package."""


class BidDomainError(AuctionError):
    """A bid coordinate lies outside ``[0, H]``."""


class RegimeError(AuctionError):
    """The OR value is outside the regime where the mixed equilibrium exists (v <= 1/2)."""


class PreconditionError(AuctionError):
    """An operation was called with inputs violating its precondition."""
