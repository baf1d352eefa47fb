"""Artifact registry: corpora, target checkpoints, generated sets.

Every artifact is addressed by a symbolic name (seen-A, gen-B, gen-A-s4...),
built on demand into the workspace, and cached. The cache key covers the run
fingerprint, so artifacts are pure functions of (name, RunConfig): a row run
in isolation sees exactly the bytes the full matrix sees. Publication is
atomic (build under tmp/, then rename), so parallel rows can race safely.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import tempfile
from dataclasses import replace as dc_replace
from pathlib import Path

from mialab.errors import ConfigError
from mialab.experiments.config import RunConfig
from mialab.ldm.checkpoint import DiffusionCheckpoint
from mialab.ldm.sample import SampleRequest, sample
from mialab.ldm.train import TrainConfig, finetune, train_base
from mialab.seeding import derive_seed
from mialab.synthdata.caption import caption_text, prompt_for
from mialab.synthdata.faces import CorpusSpec, gen_corpus
from mialab.synthdata.manifest import DatasetManifest
from mialab.synthdata.watermark import WatermarkSpec, watermark_manifest

log = logging.getLogger(__name__)

CORPUS_NAMES = ("wild-pre", "wild", "corpus-A", "corpus-B")
PARTITION_NAMES = ("seen-A", "unseen-A", "seen-B", "unseen-B")
WATERMARK_NAMES = ("seen-A-wm", "seen-A-hwm")


def _fmt_scale(s: float) -> str:
    return f"{s:g}"


class Registry:
    def __init__(self, rc: RunConfig):
        self.rc = rc
        self.ws = Path(rc.workspace)
        for sub in ("corpora", "checkpoints", "generated", "scores", "reports", "tmp"):
            (self.ws / sub).mkdir(parents=True, exist_ok=True)

    # ---------- naming ----------

    def known_dataset(self, name: str) -> bool:
        try:
            self._dataset_plan(name)
            return True
        except ConfigError:
            return False

    def _dataset_plan(self, name: str) -> dict:
        """Classify a dataset selector; raises ConfigError for unknown names."""
        if name in CORPUS_NAMES:
            return {"kind": "corpus", "name": name}
        if name in PARTITION_NAMES:
            return {"kind": "partition", "name": name}
        if name in WATERMARK_NAMES:
            return {"kind": "watermark", "name": name}
        if name.startswith("mix-A-wild-"):
            ra, rb = self._mix_ratio(name)
            return {"kind": "mix", "name": name, "ratio": (ra, rb)}
        if name.startswith("gen-"):
            return {"kind": "generated", "name": name, **self._gen_plan(name)}
        raise ConfigError(f"unknown dataset selector {name!r}")

    @staticmethod
    def _mix_ratio(name: str) -> tuple[int, int]:
        parts = name.split("-")
        if len(parts) != 5:
            raise ConfigError(f"bad mix selector {name!r} (want mix-A-wild-<ra>-<rb>)")
        try:
            return int(parts[3]), int(parts[4])
        except ValueError as exc:
            raise ConfigError(f"bad mix ratio in {name!r}") from exc

    def _gen_plan(self, name: str) -> dict:
        """Decode a generated-set selector into (checkpoint, prompt, count...)."""
        sc = self.rc.scale
        plan = {
            "count": sc.gen_count,
            "guidance": sc.guidance,
            "prompt": prompt_for("A"),
            "target": "seen-A",
            "ckpt": "ft-A",
            "fresh": False,
        }
        if name in ("gen-A", "gen-A-test"):
            plan["fresh"] = name.endswith("-test")
        elif name in ("gen-B", "gen-B-test"):
            plan.update(ckpt="ft-B", prompt=prompt_for("B"), target="seen-B",
                        fresh=name.endswith("-test"))
        elif name == "gen-A-wm":
            plan.update(ckpt="ft-A-wm", target="seen-A-wm")
        elif name == "gen-A-hwm":
            plan.update(ckpt="ft-A-hwm", target="seen-A-hwm")
        elif name == "gen-A-profile":
            plan.update(prompt="a profile picture")
        elif name == "gen-NFT-A":
            plan.update(ckpt="base", target=None, count=sc.nft_count)
        elif name == "gen-NFT-B":
            plan.update(ckpt="base", prompt=prompt_for("B"), target=None, count=sc.nft_count)
        elif name.startswith("gen-A-s"):
            try:
                s = float(name[len("gen-A-s"):])
            except ValueError as exc:
                raise ConfigError(f"bad guidance selector {name!r}") from exc
            plan.update(guidance=s)
        elif name.startswith("gen-A-e"):
            try:
                epochs = int(name[len("gen-A-e"):])
            except ValueError as exc:
                raise ConfigError(f"bad epoch selector {name!r}") from exc
            plan.update(ckpt=f"ft-A-e{epochs}")
        elif name.startswith("gen-mix-A-wild-"):
            ra, rb = self._mix_ratio(name[len("gen-"):])
            plan.update(ckpt=f"ft-mix-A-wild-{ra}-{rb}", target=f"mix-A-wild-{ra}-{rb}")
        else:
            raise ConfigError(f"unknown generated selector {name!r}")
        return plan

    # ---------- cache plumbing ----------

    def _key(self, name: str) -> str:
        payload = f"{name}\x1f{self.rc.fingerprint()}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def _cached_dir(self, final: Path, name: str) -> bool:
        meta = final / "meta.json"
        if meta.exists():
            try:
                if json.loads(meta.read_text()).get("key") == self._key(name):
                    log.info("cache hit: %s", name)
                    return True
            except (OSError, json.JSONDecodeError):
                pass
            shutil.rmtree(final)
        return False

    def _publish_dir(self, tmp: Path, final: Path, name: str, extra_meta: dict | None = None) -> None:
        meta = {"key": self._key(name), "name": name}
        meta.update(extra_meta or {})
        (tmp / "meta.json").write_text(json.dumps(meta, sort_keys=True))
        try:
            os.replace(tmp, final)
        except OSError:
            # another worker published first; keep theirs
            shutil.rmtree(tmp, ignore_errors=True)

    def _build_dir(self, final: Path, name: str, builder, extra_meta: dict | None = None) -> None:
        if self._cached_dir(final, name):
            return
        tmp = Path(tempfile.mkdtemp(prefix=f"{name}-", dir=self.ws / "tmp"))
        builder(tmp)
        self._publish_dir(tmp, final, name, extra_meta)

    # ---------- datasets ----------

    def dataset_dir(self, name: str) -> Path:
        plan = self._dataset_plan(name)
        return self.ws / ("generated" if plan["kind"] == "generated" else "corpora") / name

    def dataset(self, name: str) -> DatasetManifest:
        plan = self._dataset_plan(name)
        final = self.dataset_dir(name)
        manifest_path = final / "manifest.jsonl"
        kind = plan["kind"]

        if kind == "corpus":
            inst = {"wild-pre": "WILD", "wild": "WILD", "corpus-A": "A", "corpus-B": "B"}[name]
            sc = self.rc.scale
            count = {"wild-pre": sc.pre_size, "wild": sc.wild_size}.get(name, sc.corpus_size)
            spec = CorpusSpec(
                institution=inst,
                count=count,
                seed=derive_seed(self.rc.seed, "corpus", name),
                size=self.rc.image_size,
            )
            self._build_dir(final, name, lambda tmp: gen_corpus(spec, tmp))
        elif kind == "partition":
            inst = name[-1]
            side = name.split("-")[0]
            base = self.dataset(f"corpus-{inst}")
            from mialab.synthdata.manifest import partition

            def build(tmp: Path, base=base, inst=inst, side=side):
                seen, unseen = partition(
                    base, self.rc.scale.seen_fraction, derive_seed(self.rc.seed, "partition", inst)
                )
                (seen if side == "seen" else unseen).save(tmp / "manifest.jsonl")

            self._build_dir(final, name, build)
        elif kind == "watermark":
            seen = self.dataset("seen-A")
            wm = WatermarkSpec.visible() if name.endswith("-wm") else WatermarkSpec.hidden()
            self._build_dir(final, name, lambda tmp: watermark_manifest(seen, wm, tmp))
        elif kind == "mix":
            ra, rb = plan["ratio"]
            seen = self.dataset("seen-A")
            wild = self.dataset("wild")
            from mialab.synthdata.manifest import mix

            def build(tmp: Path):
                mixed = mix(seen, wild, (ra, rb))
                # the whole target set is captioned with the institution-A
                # prefix, mirroring conditioned auto-labeling of the mixed set
                recs = [
                    dc_replace(r, caption=caption_text("A", r.attrs)) if r.source != "A" else r
                    for r in mixed.records
                ]
                DatasetManifest(recs).save(tmp / "manifest.jsonl")

            self._build_dir(final, name, build)
        else:  # generated
            ckpt = self.checkpoint(plan["ckpt"])

            def build(tmp: Path):
                req = SampleRequest(
                    prompt=plan["prompt"],
                    seed=derive_seed(self.rc.seed, "sample", name) % 2**62,
                    count=plan["count"],
                    steps=self.rc.scale.steps,
                    guidance_scale=plan["guidance"],
                )
                sample(ckpt, req, tmp, id_prefix=name)

            self._build_dir(final, name, build, extra_meta={"target": plan["target"]})

        return DatasetManifest.load(manifest_path)

    def generated_target(self, name: str) -> str | None:
        """Fine-tune target corpus of a generated selector, None otherwise."""
        try:
            plan = self._dataset_plan(name)
        except ConfigError:
            return None
        if plan["kind"] != "generated":
            return None
        return plan["target"]

    # ---------- checkpoints ----------

    def checkpoint_path(self, name: str) -> Path:
        return self.ws / "checkpoints" / f"{name}.ckpt"

    def _ckpt_cached(self, name: str) -> bool:
        path = self.checkpoint_path(name)
        meta = path.with_suffix(".meta.json")
        if path.exists() and meta.exists():
            try:
                if json.loads(meta.read_text()).get("key") == self._key(name):
                    log.info("cache hit: %s", name)
                    return True
            except (OSError, json.JSONDecodeError):
                pass
        return False

    def _publish_ckpt(self, ckpt: DiffusionCheckpoint, name: str) -> None:
        path = self.checkpoint_path(name)
        tmp = path.with_suffix(f".tmp-{os.getpid()}")
        ckpt.save(tmp)
        meta_tmp = path.with_suffix(f".metatmp-{os.getpid()}")
        meta_tmp.write_text(json.dumps({"key": self._key(name), "name": name}, sort_keys=True))
        os.replace(tmp, path)
        os.replace(meta_tmp, path.with_suffix(".meta.json"))

    def train_config(self) -> TrainConfig:
        sc = self.rc.scale
        return TrainConfig(
            epochs=sc.base_epochs,
            ae_epochs=sc.ae_epochs,
            seed=derive_seed(self.rc.seed, "train", "base"),
        )

    def checkpoint(self, name: str) -> DiffusionCheckpoint:
        path = self.checkpoint_path(name)
        if self._ckpt_cached(name):
            return DiffusionCheckpoint.load(path)
        sc = self.rc.scale
        if name == "base":
            ckpt = train_base(self.dataset("wild-pre"), self.train_config())
        elif name.startswith("ft-"):
            target, epochs = self._ft_plan(name)
            ckpt = finetune(
                self.checkpoint("base"),
                self.dataset(target),
                epochs=epochs,
                seed=derive_seed(self.rc.seed, "train", name),
            )
        else:
            raise ConfigError(f"unknown checkpoint selector {name!r}")
        self._publish_ckpt(ckpt, name)
        return DiffusionCheckpoint.load(path)

    def _ft_plan(self, name: str) -> tuple[str, int]:
        sc = self.rc.scale
        if name.startswith("ft-mix-"):
            return name[len("ft-"):], sc.target_epochs
        mapping = {
            "ft-A": ("seen-A", sc.target_epochs),
            "ft-B": ("seen-B", sc.target_epochs),
            "ft-A-wm": ("seen-A-wm", sc.target_epochs),
            "ft-A-hwm": ("seen-A-hwm", sc.target_epochs),
        }
        if name in mapping:
            return mapping[name]
        if name.startswith("ft-A-e"):
            try:
                return "seen-A", int(name[len("ft-A-e"):])
            except ValueError as exc:
                raise ConfigError(f"bad epoch checkpoint selector {name!r}") from exc
        raise ConfigError(f"unknown checkpoint selector {name!r}")
