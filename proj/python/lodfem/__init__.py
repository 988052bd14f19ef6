"""Multiscale generalized FEM for parabolic problems with rough coefficients."""

from lodfem._core import *  # noqa: F401,F403
from lodfem._core import __doc__  # noqa: F401
