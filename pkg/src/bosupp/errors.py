"""Exception types raised by the library."""


class BosuppError(Exception):
    """Base class for library errors."""


class TruncationError(BosuppError):
    """Probability weight escaped into the Fock guard band (or past the cutoff)."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class HeraldStarvationError(BosuppError):
    """Heralded success probability too small to normalize the output."""

    def __init__(self, message, p_succ=None):
        super().__init__(message)
        self.p_succ = p_succ


class ConfigError(BosuppError):
    """Malformed descriptor or experiment configuration."""
