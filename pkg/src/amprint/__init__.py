"""amprint: dimensional-error prediction and printability scoring for AM."""

__version__ = "0.1.0"

from .errors import AmprintError  # noqa: F401
