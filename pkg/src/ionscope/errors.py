"""Exception types raised across the package."""


class IonscopeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(IonscopeError, ValueError):
    """An input violates a documented invariant (chain, pulse, slice, run config)."""


class DegenerateSliceError(ConfigurationError):
    """A slice resolves to no valid detector-angle pairs."""


class DegenerateConfigurationError(ConfigurationError):
    """Too few radiating ions for the requested correlation order."""


class UnsupportedConfigurationError(ConfigurationError):
    """A combination the model does not cover, e.g. G2 for a non-pi pulse."""


class NonNormalizableError(IonscopeError, ValueError):
    """A pattern has no strictly positive value and cannot become a distribution."""


class IntegrityError(IonscopeError, ValueError):
    """Events and distribution do not refer to the same binning."""
