import os

import pytest

from src.parser import parse_program
from src.utils.config import PROJECT_ROOT

PROGRAMS = PROJECT_ROOT / "programs"

ADDITION_SOURCE = (PROGRAMS / "mnist_addition.slash").read_text(encoding='utf-8')


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: execuções longas de aceitação (SLASH_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SLASH_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="defina SLASH_RUN_SLOW=1 para rodar")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def addition_program():
    return parse_program(ADDITION_SOURCE)


@pytest.fixture
def programs_dir():
    return PROGRAMS
