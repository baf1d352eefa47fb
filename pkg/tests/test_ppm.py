import numpy as np
import pytest

from mialab.errors import DimensionError, FormatError
from mialab.synthdata.ppm import read_ppm, write_ppm


def test_roundtrip_exact_on_quantized_values(tmp_path, rng):
    img = np.round(rng.random((16, 16, 3)) * 255).astype(np.float32) / 255.0
    path = tmp_path / "img.ppm"
    write_ppm(path, img)
    back = read_ppm(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, img.astype(np.float32))


def test_write_quantizes_once(tmp_path):
    img = np.full((4, 4, 3), 0.5, dtype=np.float32)
    path = tmp_path / "half.ppm"
    write_ppm(path, img)
    raw = path.read_bytes()
    assert raw.startswith(b"P6\n4 4\n255\n")
    assert set(raw[len(b"P6\n4 4\n255\n"):]) == {128}  # round(0.5 * 255) = 128


def test_write_is_deterministic(tmp_path, rng):
    img = rng.random((8, 8, 3)).astype(np.float32)
    write_ppm(tmp_path / "a.ppm", img)
    write_ppm(tmp_path / "b.ppm", img)
    assert (tmp_path / "a.ppm").read_bytes() == (tmp_path / "b.ppm").read_bytes()


def test_values_clipped(tmp_path):
    img = np.array([[[1.5, -0.5, 0.0]]], dtype=np.float32)
    write_ppm(tmp_path / "c.ppm", img)
    assert read_ppm(tmp_path / "c.ppm")[0, 0].tolist() == [1.0, 0.0, 0.0]


def test_rejects_bad_shape(tmp_path):
    with pytest.raises(DimensionError):
        write_ppm(tmp_path / "x.ppm", np.zeros((4, 4)))


def test_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.ppm"
    p.write_bytes(b"P5\n2 2\n255\n" + b"\x00" * 4)
    with pytest.raises(FormatError):
        read_ppm(p)


def test_rejects_truncated_body(tmp_path):
    p = tmp_path / "short.ppm"
    p.write_bytes(b"P6\n2 2\n255\n" + b"\x00" * 5)
    with pytest.raises(FormatError):
        read_ppm(p)
