import numpy as np
import pytest

from mialab.errors import ConfigError, DimensionError
from mialab.synthdata.faces import CorpusSpec, gen_corpus
from mialab.synthdata.ppm import read_ppm
from mialab.synthdata.watermark import (
    GLYPH,
    WatermarkSpec,
    apply_watermark,
    watermark_manifest,
)


@pytest.fixture()
def img(rng):
    return rng.random((32, 32, 3)).astype(np.float32)


def test_alpha_zero_is_identity(img):
    wm = WatermarkSpec(kind="none", alpha=0.0, placement="full-frame")
    assert np.array_equal(apply_watermark(img, wm), img)


def test_alpha_one_corner_sets_glyph_pixels(img):
    out = apply_watermark(img, WatermarkSpec.visible())
    region = out[0:8, 24:32]
    mask = GLYPH.astype(bool)
    assert np.array_equal(region[mask], np.ones_like(region[mask]))
    assert np.array_equal(region[~mask], img[0:8, 24:32][~mask])


def test_hidden_blend_hand_value():
    img = np.full((32, 32, 3), 0.5, dtype=np.float32)
    out = apply_watermark(img, WatermarkSpec.hidden())
    mask = GLYPH.repeat(4, axis=0).repeat(4, axis=1).astype(bool)
    # 0.99 * 0.50 + 0.01 * 1.0 = 0.505
    assert np.allclose(out[mask], 0.505, atol=1e-7)
    assert np.array_equal(out[~mask], img[~mask])


def test_corner_locality(img):
    out = apply_watermark(img, WatermarkSpec.visible())
    untouched = np.ones((32, 32), dtype=bool)
    untouched[0:8, 24:32] = False
    assert np.array_equal(out[untouched], img[untouched])


def test_output_clamped(rng):
    img = rng.random((32, 32, 3)).astype(np.float32)
    out = apply_watermark(img, WatermarkSpec.hidden())
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_glyph_must_fit():
    small = np.zeros((4, 4, 3), dtype=np.float32)
    with pytest.raises(DimensionError):
        apply_watermark(small, WatermarkSpec.visible())


def test_kind_invariants_enforced():
    with pytest.raises(ConfigError):
        WatermarkSpec(kind="visible", alpha=0.5, placement="corner-top-right")
    with pytest.raises(ConfigError):
        WatermarkSpec(kind="hidden", alpha=0.01, placement="corner-top-right")
    with pytest.raises(ConfigError):
        WatermarkSpec(kind="none", alpha=1.5, placement="full-frame")


def test_watermark_manifest(tmp_path):
    corpus = gen_corpus(CorpusSpec("A", 4, seed=3), tmp_path / "src")
    wm = watermark_manifest(corpus, WatermarkSpec.visible(), tmp_path / "wm")
    assert len(wm) == 4
    for r_src, r_wm in zip(corpus.sorted_records(), wm.sorted_records()):
        assert r_wm.image_id == f"{r_src.image_id}-wm"
        assert r_wm.watermark == "visible"
        assert r_wm.caption == r_src.caption
        src_img = read_ppm(r_src.path)
        wm_img = read_ppm(r_wm.path)
        mask = GLYPH.astype(bool)
        assert np.array_equal(wm_img[0:8, 24:32][mask], np.ones((mask.sum(), 3), np.float32))
        assert not np.array_equal(src_img, wm_img)
