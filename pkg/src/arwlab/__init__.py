"""Monte Carlo laboratory and exact small-n solvers for activated random
walk on the looped complete graph with a sink."""

from .model import DerivedConstants, Params, constants, derive_p

__version__ = "0.1.0"

__all__ = ["Params", "DerivedConstants", "constants", "derive_p", "__version__"]
