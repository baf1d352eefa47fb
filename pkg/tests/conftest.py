import numpy as np
import pytest

from mialab.seeding import pin_torch_runtime
from mialab.synthdata.faces import CorpusSpec, gen_corpus

pin_torch_runtime()


@pytest.fixture(scope="session")
def tiny_wild(tmp_path_factory):
    """100-image WILD corpus shared across tests."""
    out = tmp_path_factory.mktemp("tiny-wild")
    return gen_corpus(CorpusSpec("WILD", 100, seed=901), out)


@pytest.fixture(scope="session")
def tiny_a(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-a")
    return gen_corpus(CorpusSpec("A", 80, seed=902), out)


@pytest.fixture(scope="session")
def tiny_b(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-b")
    return gen_corpus(CorpusSpec("B", 80, seed=903), out)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
