"""Mini-C frontend: parsing, preprocessing and automaton construction."""

from .parser import parse
from .transform import preprocess, remove_fp_calls, single_exit
from .icfa import ICFA, Edge, Location, build_icfa

__all__ = [
    "parse", "preprocess", "remove_fp_calls", "single_exit",
    "ICFA", "Edge", "Location", "build_icfa",
]
