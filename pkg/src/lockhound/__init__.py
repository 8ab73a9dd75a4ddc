"""Static deadlock analysis for a pthreads-like mini language.

The package proves programs deadlock-free (or reports candidate lock
cycles) by combining a context-sensitive pointer analysis, may/must
locksets, a non-concurrency proof system and a lock-order graph.  A
small explicit-state interpreter doubles as a ground-truth oracle for
testing.
"""

from .errors import (
    DivergedError, MainThreadError, MissingMainError, ParseError,
    SourceError, TypeCheckError, UnknownPlaceError,
)
from .frontend import ICFA, build_icfa, parse, preprocess
from .pipeline import (
    Analysis, Config, INCONCLUSIVE, POTENTIAL, PROVED_FREE,
    analyze_icfa, analyze_source, report_dict, report_text,
)

__version__ = "0.1.0"

__all__ = [
    "Analysis", "Config", "ICFA",
    "INCONCLUSIVE", "POTENTIAL", "PROVED_FREE",
    "analyze_icfa", "analyze_source", "build_icfa", "parse", "preprocess",
    "report_dict", "report_text",
    "DivergedError", "MainThreadError", "MissingMainError", "ParseError",
    "SourceError", "TypeCheckError", "UnknownPlaceError",
    "__version__",
]
