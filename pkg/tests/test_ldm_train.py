import hashlib
import json

import numpy as np
import pytest
import torch

from mialab.errors import ConfigError, DataError
from mialab.ldm.nets import MicroDenoiser, UNetDenoiser, count_params
from mialab.ldm.train import TrainConfig, denoiser_loss, finetune, modules_from_checkpoint, train_base
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord

TINY = TrainConfig(epochs=3, ae_epochs=4, batch_size=32, seed=5)


def _checksum(state: dict) -> str:
    h = hashlib.sha256()
    for k in sorted(state):
        h.update(k.encode())
        h.update(np.ascontiguousarray(state[k]).tobytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def base_ckpt(tiny_wild_module):
    return train_base(tiny_wild_module, TINY)


@pytest.fixture(scope="module")
def tiny_wild_module(tmp_path_factory):
    from mialab.synthdata.faces import CorpusSpec, gen_corpus

    return gen_corpus(CorpusSpec("WILD", 80, seed=66), tmp_path_factory.mktemp("w"))


@pytest.fixture(scope="module")
def tiny_a_module(tmp_path_factory):
    from mialab.synthdata.faces import CorpusSpec, gen_corpus

    return gen_corpus(CorpusSpec("A", 60, seed=67), tmp_path_factory.mktemp("a"))


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        train_base(DatasetManifest([]), TINY)


def test_uncaptioned_corpus_rejected(tiny_wild_module, tmp_path):
    recs = [
        ManifestRecord(image_id=r.image_id, path=r.path, caption="", source=r.source)
        for r in tiny_wild_module.records
    ]
    with pytest.raises(DataError):
        train_base(DatasetManifest(recs), TINY)


def test_training_loss_decreases(base_ckpt):
    assert base_ckpt.meta["loss_final_epoch"] < base_ckpt.meta["loss_first_epoch"]


def test_provenance_records_base(base_ckpt, tiny_wild_module):
    assert base_ckpt.provenance[0]["kind"] == "base"
    assert base_ckpt.provenance[0]["manifest"] == tiny_wild_module.digest()
    assert base_ckpt.provenance[0]["epochs"] == TINY.epochs


def test_zero_epoch_training_is_initialization(tiny_wild_module):
    cfg = TrainConfig(epochs=0, ae_epochs=0, seed=5)
    ckpt = train_base(tiny_wild_module, cfg)
    assert ckpt.provenance[0]["epochs"] == 0
    # two zero-epoch runs produce identical initializations
    ckpt2 = train_base(tiny_wild_module, cfg)
    assert _checksum(ckpt.dn_state) == _checksum(ckpt2.dn_state)
    assert _checksum(ckpt.ae_state) == _checksum(ckpt2.ae_state)


def test_training_deterministic_in_seed(tiny_wild_module):
    c1 = train_base(tiny_wild_module, TINY)
    c2 = train_base(tiny_wild_module, TINY)
    assert _checksum(c1.dn_state) == _checksum(c2.dn_state)
    assert _checksum(c1.ae_state) == _checksum(c2.ae_state)
    c3 = train_base(tiny_wild_module, TrainConfig(epochs=3, ae_epochs=4, seed=6))
    assert _checksum(c3.dn_state) != _checksum(c1.dn_state)


def test_unet_parameter_budget():
    n = count_params(UNetDenoiser())
    assert 100_000 <= n <= 500_000


def test_micro_model_parameter_budget():
    assert count_params(MicroDenoiser()) <= 1000


class TestFinetune:
    def test_epochs_zero_is_identity(self, base_ckpt, tiny_a_module):
        out = finetune(base_ckpt, tiny_a_module, epochs=0, seed=1)
        assert _checksum(out.dn_state) == _checksum(base_ckpt.dn_state)

    def test_autoencoder_frozen(self, base_ckpt, tiny_a_module):
        out = finetune(base_ckpt, tiny_a_module, epochs=2, seed=1)
        assert _checksum(out.ae_state) == _checksum(base_ckpt.ae_state)
        assert _checksum(out.dn_state) != _checksum(base_ckpt.dn_state)

    def test_provenance_appended(self, base_ckpt, tiny_a_module):
        out = finetune(base_ckpt, tiny_a_module, epochs=2, seed=9)
        assert out.provenance[0] == base_ckpt.provenance[0]
        assert out.provenance[1]["kind"] == "finetuned"
        assert out.provenance[1]["epochs"] == 2
        assert out.provenance[1]["seed"] == 9
        # base object untouched
        assert len(base_ckpt.provenance) == 1

    def test_vocab_extended(self, base_ckpt, tiny_a_module):
        out = finetune(base_ckpt, tiny_a_module, epochs=0, seed=1)
        assert "instA" in out.vocab
        assert set(base_ckpt.vocab) <= set(out.vocab)

    def test_prefix_mismatch_rejected(self, base_ckpt, tiny_a_module, tiny_wild_module):
        from mialab.synthdata.manifest import concat

        mixed = concat([DatasetManifest(tiny_a_module.records[:10]),
                        DatasetManifest(tiny_wild_module.records[:10])])
        with pytest.raises(ConfigError):
            finetune(base_ckpt, mixed, epochs=0, seed=1)
        # warn-and-continue mode trains anyway
        out = finetune(base_ckpt, mixed, epochs=0, seed=1, warn_on_prefix_mismatch=True)
        assert out.provenance[-1]["kind"] == "finetuned"

    def test_deterministic(self, base_ckpt, tiny_a_module):
        a = finetune(base_ckpt, tiny_a_module, epochs=2, seed=4)
        b = finetune(base_ckpt, tiny_a_module, epochs=2, seed=4)
        assert _checksum(a.dn_state) == _checksum(b.dn_state)


def test_denoiser_loss_matches_manual():
    from mialab.ldm.schedule import NoiseSchedule, forward_diffuse

    torch.manual_seed(0)
    sched = NoiseSchedule.linear()
    dn = MicroDenoiser()
    z0 = torch.randn(4, 4, 8, 8)
    t = torch.tensor([3, 60, 120, 200])
    eps = torch.randn(4, 4, 8, 8)
    emb = torch.randn(4, 32)
    loss = denoiser_loss(dn, sched, z0, t, eps, emb)
    zt = forward_diffuse(z0, t, eps, sched)
    manual = torch.nn.functional.mse_loss(dn(zt, t, emb), eps)
    assert torch.equal(loss, manual)


def test_config_json_roundtrip():
    cfg = TrainConfig(epochs=7, betas=(1e-4, 0.03), lr=2e-3)
    back = TrainConfig.from_json(cfg.to_json())
    assert back == cfg
    obj = json.loads(cfg.to_json())
    for key in ("timesteps", "betas", "latent_channels", "epochs", "lr", "caption_dropout", "seed"):
        assert key in obj


def test_modules_roundtrip_through_checkpoint(base_ckpt):
    ae, dn = modules_from_checkpoint(base_ckpt)
    g = torch.Generator().manual_seed(0)
    x = torch.rand(2, 3, 32, 32, generator=g)
    with torch.no_grad():
        z = ae.encode(x)
        out = dn(z, torch.tensor([5, 9]), torch.zeros(2, 32))
    assert z.shape == (2, 4, 8, 8)
    assert out.shape == z.shape
    assert z.abs().max() <= 1.0  # tanh-bounded latents
