from __future__ import annotations

import pytest

from nelson_topos.catalog import BASES
from nelson_topos.topos import ToposCtx


@pytest.fixture
def fs() -> ToposCtx:
    return ToposCtx(BASES["terminal"]())


@pytest.fixture
def z2() -> ToposCtx:
    return ToposCtx(BASES["Z/2"]())


@pytest.fixture
def arrow() -> ToposCtx:
    return ToposCtx(BASES["arrow"]())


@pytest.fixture
def gpd() -> ToposCtx:
    return ToposCtx(BASES["groupoid2"]())



def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
