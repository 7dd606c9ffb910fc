from __future__ import annotations

import sys

import pytest

from rlnclab import kernels
from rlnclab.field import field_create
from rlnclab.network import build_butterfly

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(scope="session")
def butterfly():
    return build_butterfly()


@pytest.fixture(scope="session")
def gf2():
    return field_create(2)


@pytest.fixture(scope="session")
def gf3():
    return field_create(3)


@pytest.fixture(scope="session")
def gf4():
    return field_create(2, 2)


@pytest.fixture(scope="session")
def gf5():
    return field_create(5)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
