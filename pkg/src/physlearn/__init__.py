"""Stochastic physical learning machines: switches, wells, observers, perceptrons and clocks."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .core import NumericalAbort, RngStream, Trajectory  # noqa: E402

__all__ = ["NumericalAbort", "RngStream", "Trajectory", "__version__"]
