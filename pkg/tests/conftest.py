import numpy as np
import pytest

from kinefold.chain import build_chain
from kinefold.kcm import Field, FieldConfig
from kinefold.pdbio import load_params
from kinefold.topology import TreeWeights, build_tree


@pytest.fixture(scope="session")
def param_set():
    return load_params()


@pytest.fixture(scope="session")
def ala2(param_set):
    return build_chain(["ALA", "ALA"])


@pytest.fixture(scope="session")
def gly3():
    return build_chain(["GLY"] * 3)


@pytest.fixture(scope="session")
def mixed_chain():
    return build_chain(["SER", "ALA", "GLY", "CYS", "ALA"])


def make_field(chain, param_set, **cfg_kwargs):
    params = param_set.resolve(chain)
    weights = TreeWeights(build_tree(chain), param_set.weights)
    return Field(params, weights, FieldConfig(**cfg_kwargs))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
