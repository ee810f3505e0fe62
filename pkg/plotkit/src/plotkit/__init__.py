"""Figure rendering for mnlbandit benchmark CSVs."""

from .figures import FigureSpec, SchemaError, load_cell, plot_regret, plot_runtime

__all__ = ["FigureSpec", "SchemaError", "load_cell", "plot_regret", "plot_runtime"]
