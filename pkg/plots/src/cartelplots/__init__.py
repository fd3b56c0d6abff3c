"""Figure rendering for cartelsim CSV outputs."""

from .readers import CsvError
from .render import KINDS, FigureSpec, RenderResult, render

__all__ = ["CsvError", "FigureSpec", "KINDS", "RenderResult", "render"]
