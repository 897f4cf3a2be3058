import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

PROGRAMS = os.path.join(os.path.dirname(__file__), "programs")


def program_source(name: str) -> str:
    with open(os.path.join(PROGRAMS, name), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def tree_source() -> str:
    return program_source("tree.fst")


@pytest.fixture(scope="session")
def cross_source() -> str:
    return program_source("cross.fst")


@pytest.fixture(scope="session")
def cross_doubled_source() -> str:
    return program_source("cross_doubled.fst")


def checked_program(source: str):
    from sluice.parser import parse_program
    from sluice.typecheck import check_program

    prog, diags = parse_program(source)
    assert prog is not None and not diags, [d.render() for d in diags]
    cd = check_program(prog)
    assert not cd, [d.render() for d in cd]
    return prog
