"""Truncated-Fock simulation and closed-form analytics for hybrid CV-DV bosonic noise suppression."""

__version__ = "0.1.0"

from . import channels, codes, fock  # noqa: E402,F401
from .errors import BosuppError, ConfigError, HeraldStarvationError, TruncationError  # noqa: E402,F401
