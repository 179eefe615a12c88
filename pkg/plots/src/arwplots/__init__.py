"""Publication-style figures from arwlab result files.

This package only reads the long-format CSV / JSON-lines files written
by the simulation CLI; it recomputes nothing beyond empirical CDFs and
overlays the predicted reference curves.
"""

from .figures import FIGURE_KINDS, FigureSpec, RenderError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "render", "RenderError", "FIGURE_KINDS", "__version__"]
