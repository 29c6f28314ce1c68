"""Hermite kernel surrogates of optimal value functions."""

from ._core import *  # noqa: F401,F403
from ._core import (  # noqa: F401
    AmpModel,
    LinearModel,
    Surrogate,
    explore,
    fit_vkoga,
    simulate,
    solve_open_loop,
)

__version__ = "0.1.0"
