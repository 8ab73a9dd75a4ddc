import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make checks.py importable

from lockhound.frontend import build_icfa, parse, preprocess

FIXTURES = Path(__file__).parent / "fixtures"


def load(name: str) -> str:
    return (FIXTURES / name).read_text()


def icfa_of(source: str):
    return build_icfa(preprocess(parse(source)))


def analyzed(source: str, cfg=None, max_states: int = 30_000):
    """Analysis plus oracle result (None when the oracle cannot run)."""
    from lockhound.oracle import OracleUnsupported, run_oracle
    from lockhound.pipeline import analyze_icfa

    icfa = icfa_of(source)
    a = analyze_icfa(icfa, cfg)
    try:
        res = run_oracle(icfa, max_states=max_states)
    except OracleUnsupported:
        res = None
    return a, res


@pytest.fixture(scope="session")
def showcase_source() -> str:
    return load("showcase.mc")


@pytest.fixture(scope="session")
def showcase_icfa(showcase_source):
    return icfa_of(showcase_source)
