from pathlib import Path

import pytest

from auxsem.augment import load_known
from auxsem.graph import load_graph

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"


def graph_path(name: str) -> str:
    return str(GRAPHS / name)


@pytest.fixture
def fig1a():
    return load_graph(GRAPHS / "fig1a.g")


@pytest.fixture
def fig3():
    return load_graph(GRAPHS / "fig3.g")


@pytest.fixture
def fig4a():
    return load_graph(GRAPHS / "fig4a.g")


@pytest.fixture
def bow():
    return load_graph(GRAPHS / "bow.g")


@pytest.fixture
def beta(fig1a):
    return load_known(GRAPHS / "beta.k", fig1a)


@pytest.fixture
def gamma(fig4a):
    return load_known(GRAPHS / "gamma.k", fig4a)
