import numpy as np
import pytest

from mialab.errors import DataError, DimensionError
from mialab.metrics import baseline_score, build_prototypes
from mialab.metrics.baseline import baseline_scores
from mialab.metrics.rank import spearman
from mialab.synthdata.faces import CorpusSpec, render_face


@pytest.fixture(scope="module")
def exemplars():
    a = [render_face(CorpusSpec("A", 20, seed=31), i)[0] for i in range(16)]
    b = [render_face(CorpusSpec("B", 20, seed=32), i)[0] for i in range(16)]
    return a, b


def test_self_exemplar_scores_positive(exemplars):
    a, b = exemplars
    protos = build_prototypes([a[0]], [b[0]], extractor_seed=0)
    assert baseline_score(a[0], protos, extractor_seed=0) > 0.0


def test_prototype_swap_negates_exactly(exemplars, rng):
    a, b = exemplars
    protos = build_prototypes(a, b, extractor_seed=0)
    swapped = (protos[1], protos[0])
    img = rng.random((32, 32, 3)).astype(np.float32)
    s = baseline_score(img, protos, extractor_seed=0)
    assert baseline_score(img, swapped, extractor_seed=0) == -s


def test_separates_institutions(exemplars):
    a, b = exemplars
    protos = build_prototypes(a, b, extractor_seed=0)
    fresh_a = [render_face(CorpusSpec("A", 40, seed=33), i)[0] for i in range(20)]
    fresh_b = [render_face(CorpusSpec("B", 40, seed=34), i)[0] for i in range(20)]
    sa = baseline_scores(fresh_a, protos, extractor_seed=0)
    sb = baseline_scores(fresh_b, protos, extractor_seed=0)
    assert np.mean(sa) > np.mean(sb)


def test_dimension_mismatch(exemplars, rng):
    a, b = exemplars
    protos = build_prototypes(a, b, extractor_seed=0)
    bad = (protos[0][:10], protos[1][:10])
    with pytest.raises(DimensionError):
        baseline_score(rng.random((32, 32, 3)).astype(np.float32), bad, extractor_seed=0)


def test_empty_exemplars_rejected(exemplars):
    a, _ = exemplars
    with pytest.raises(DataError):
        build_prototypes(a, [], extractor_seed=0)


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [5, 4, 3, 2]) == pytest.approx(-1.0)

    def test_ties_averaged(self):
        rho = spearman([1.0, 1.0, 2.0], [3.0, 3.0, 5.0])
        assert rho == pytest.approx(1.0)

    def test_undefined_cases(self):
        assert spearman([1.0], [2.0]) is None
        assert spearman([1.0, 1.0], [2.0, 3.0]) is None

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2, 3])
