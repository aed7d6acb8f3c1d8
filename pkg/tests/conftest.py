import pytest

import helpers


@pytest.fixture(scope="session")
def fig_graph():
    return helpers.fig_graph()


@pytest.fixture(scope="session")
def app_graph():
    return helpers.app_graph()


@pytest.fixture(scope="session")
def ring_graph():
    return helpers.ring_graph()


@pytest.fixture(scope="session")
def island_graph():
    return helpers.island_graph()


@pytest.fixture()
def fig_observed():
    return helpers.fig_observed()
