import pytest

from gbpkit import build_factor_graph

import helpers


@pytest.fixture
def loop_model():
    return helpers.loop_model()


@pytest.fixture
def loop_graph(loop_model):
    return build_factor_graph(loop_model)
