"""Exception types shared across the package."""


class BlockIpError(Exception):
    """Base class for all blockip errors."""


class ValidationError(BlockIpError):
    """Malformed input: dimension mismatch, non-convex term, bad bounds, ..."""


class InfeasibleError(BlockIpError):
    """The instance has no feasible solution."""


class ResourceCapError(BlockIpError):
    """A configured resource guard (cell count, norm cap, box volume) was hit."""
