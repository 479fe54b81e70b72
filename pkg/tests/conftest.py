import pathlib

import pytest

from diffelim.cli import parse_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def load_model(name):
    return parse_model((MODELS / f"{name}.txt").read_text())


@pytest.fixture(scope="session")
def linear2():
    """Two-state linear system, y = x1 + x2; minimal equation y'' - 2y' - 55y."""
    return load_model("linear_2d")


@pytest.fixture(scope="session")
def param_linear2():
    """x1' = mu1 x2, x2' = mu2 x1, y = x1 + x2; minimal equation y'' - mu1 mu2 y."""
    return load_model("param_linear_2d")


@pytest.fixture(scope="session")
def tan_tanh():
    """x1 = tan, x2 = tanh, y = x1 x2."""
    return load_model("tan_tanh_product")
