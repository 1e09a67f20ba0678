"""Iris super-resolution toolkit (SRCNN, stacked auto-encoders, iris verification)."""

from ._irissr import *  # noqa: F401,F403
from ._irissr import __doc__  # noqa: F401

__version__ = "0.1.0"
