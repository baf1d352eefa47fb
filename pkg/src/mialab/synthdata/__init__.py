"""Procedural face corpora: generation, watermarking, captioning, manifests."""

from mialab.synthdata.caption import CAPTION_PREFIXES, caption, prompt_for
from mialab.synthdata.faces import CorpusSpec, InstitutionStyle, STYLES, gen_corpus
from mialab.synthdata.manifest import DatasetManifest, ManifestRecord, mix, partition
from mialab.synthdata.ppm import read_ppm, write_ppm
from mialab.synthdata.watermark import GLYPH, WatermarkSpec, apply_watermark

__all__ = [
    "CAPTION_PREFIXES",
    "CorpusSpec",
    "DatasetManifest",
    "GLYPH",
    "InstitutionStyle",
    "ManifestRecord",
    "STYLES",
    "WatermarkSpec",
    "apply_watermark",
    "caption",
    "gen_corpus",
    "mix",
    "partition",
    "prompt_for",
    "read_ppm",
    "write_ppm",
]
