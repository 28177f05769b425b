"""Exception hierarchy used across the package."""


class PriceChainError(Exception):
    """Base class for all package errors."""


class DomainError(PriceChainError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConfigurationError(PriceChainError, ValueError):
    """A scenario or family is malformed or violates a structural axiom."""


class StructuralError(PriceChainError, ValueError):
    """An allocation or envelope breaks its ordering invariants."""


class CompatibilityViolation(PriceChainError):
    """A utility family produced more than one crossing with an envelope."""


class GenerationError(PriceChainError):
    """Random scenario generation exhausted its attempt budget."""
