"""Particle system kernels and the event-driven engine."""

from .engine import *  # noqa: F401,F403
from .kernels import *  # noqa: F401,F403
from .engine import __all__ as _e
from .kernels import __all__ as _k

__all__ = list(_k) + list(_e)
