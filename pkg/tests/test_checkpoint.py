import numpy as np
import pytest

from mialab.errors import FormatError
from mialab.ldm.checkpoint import MAGIC, DiffusionCheckpoint, load_arrays, save_arrays
from mialab.ldm.schedule import NoiseSchedule


def test_array_roundtrip_exact(tmp_path, rng):
    arrays = {
        "weights": rng.standard_normal((3, 4, 5)).astype(np.float32),
        "bias": rng.standard_normal(7).astype(np.float32),
        "scalarish": np.float32(3.25).reshape(()),
    }
    prov = {"kind": "test", "note": "roundtrip", "nested": {"a": [1, 2.5]}}
    path = tmp_path / "x.ckpt"
    save_arrays(path, arrays, prov)
    back, prov2 = load_arrays(path)
    assert prov2 == prov
    assert set(back) == set(arrays)
    for k in arrays:
        assert np.array_equal(back[k], arrays[k])
        assert back[k].dtype == np.float32


def test_magic_header(tmp_path):
    path = tmp_path / "x.ckpt"
    save_arrays(path, {}, {})
    assert path.read_bytes()[:8] == MAGIC
    path.write_bytes(b"NOTMAGIC" + path.read_bytes()[8:])
    with pytest.raises(FormatError):
        load_arrays(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "x.ckpt"
    save_arrays(path, {"a": np.ones(10, np.float32)}, {})
    path.write_bytes(path.read_bytes()[:-12])
    with pytest.raises(FormatError):
        load_arrays(path)


def test_save_is_deterministic(tmp_path, rng):
    arrays = {"b": rng.standard_normal(4).astype(np.float32), "a": np.ones(2, np.float32)}
    save_arrays(tmp_path / "1.ckpt", arrays, {"x": 1})
    save_arrays(tmp_path / "2.ckpt", arrays, {"x": 1})
    assert (tmp_path / "1.ckpt").read_bytes() == (tmp_path / "2.ckpt").read_bytes()


def test_diffusion_checkpoint_roundtrip(tmp_path, rng):
    sched = NoiseSchedule.linear()
    ckpt = DiffusionCheckpoint(
        ae_state={"enc.w": rng.standard_normal((2, 3)).astype(np.float32)},
        dn_state={"conv.w": rng.standard_normal((4, 4)).astype(np.float32)},
        schedule=sched,
        vocab=["a", "headshot", "instA"],
        arch={"latent_channels": 4, "ae_base": 16, "unet_channels": [24, 48, 72], "image_size": 32},
        provenance=[{"kind": "base", "manifest": "abc", "epochs": 3, "seed": 0}],
        meta={"recon_mae": 0.05},
    )
    path = tmp_path / "d.ckpt"
    ckpt.save(path)
    back = DiffusionCheckpoint.load(path)
    assert np.array_equal(back.ae_state["enc.w"], ckpt.ae_state["enc.w"])
    assert np.array_equal(back.dn_state["conv.w"], ckpt.dn_state["conv.w"])
    # schedule round-trips at full precision through the provenance blob
    assert np.array_equal(back.schedule.betas, sched.betas)
    assert back.vocab == ckpt.vocab
    assert back.provenance == ckpt.provenance
    assert back.meta["recon_mae"] == 0.05


def test_wrong_kind_rejected(tmp_path):
    save_arrays(tmp_path / "x.ckpt", {}, {"kind": "attack"})
    with pytest.raises(FormatError):
        DiffusionCheckpoint.load(tmp_path / "x.ckpt")
