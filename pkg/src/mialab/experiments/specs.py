"""Experiment specs: the 13-row matrix encoded as data.

Institution A stands in for the target university, B for the other one, and
"wild" for the in-the-wild face collection. Generated selectors (gen-*) are
produced by the registry from cached target models. The same rows live as
JSON files under experiments/ in the repository; `default_matrix` is the
authoritative in-code copy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from mialab.errors import ConfigError


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    name: str
    train_pos: str
    train_neg: str
    test_pos: str
    test_neg: str
    guidance_scale: float | None = None   # None = scale default
    target_epochs: int | None = None      # None = scale default
    prompt_override: str | None = None
    seeds: tuple[int, ...] | None = None  # None = scale default

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["seeds"] is not None:
            d["seeds"] = list(d["seeds"])
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        if known.get("seeds") is not None:
            known["seeds"] = tuple(known["seeds"])
        missing = {"id", "name", "train_pos", "train_neg", "test_pos", "test_neg"} - set(known)
        if missing:
            raise ConfigError(f"experiment spec missing fields: {sorted(missing)}")
        known["id"] = str(known["id"])
        return cls(**known)


def default_matrix() -> list[ExperimentSpec]:
    rows = [
        ("1", "generated A vs generated B", "gen-A", "gen-B", "gen-A-test", "gen-B-test"),
        ("2", "generated A vs real B", "gen-A", "corpus-B", "seen-A", "wild"),
        ("3", "A vs B seen", "gen-A", "gen-B", "seen-A", "seen-B"),
        ("4", "A vs B unseen", "gen-A", "gen-B", "seen-A", "unseen-B"),
        ("5", "generalised prompt", "gen-A-profile", "gen-B", "seen-A", "unseen-B"),
        ("6", "guidance scale s=8", "gen-A-s8", "gen-B", "seen-A", "unseen-B"),
        ("7", "A vs wild", "gen-A", "gen-B", "seen-A", "wild"),
        ("8", "A seen vs A unseen", "gen-A", "gen-B", "seen-A", "unseen-A"),
        ("9", "NFT vs B", "gen-NFT-A", "gen-B", "seen-A", "unseen-B"),
        ("10", "NFT vs NFT", "gen-NFT-A", "gen-NFT-B", "seen-A", "unseen-B"),
        ("11", "watermark", "gen-A-wm", "gen-B", "seen-A-wm", "unseen-B"),
        ("12", "hidden watermark", "gen-A-hwm", "gen-B", "seen-A-hwm", "unseen-B"),
        ("13", "diluted target 1:1", "gen-mix-A-wild-1-1", "gen-B", "seen-A", "unseen-B"),
    ]
    specs = [ExperimentSpec(*row) for row in rows]
    out = []
    for s in specs:
        if s.id == "5":
            s = ExperimentSpec(**{**s.to_dict(), "prompt_override": "a profile picture"})
        if s.id == "6":
            s = ExperimentSpec(**{**s.to_dict(), "guidance_scale": 8.0})
        out.append(s)
    return out


def row4_spec() -> ExperimentSpec:
    return next(s for s in default_matrix() if s.id == "4")


def load_specs_dir(path: str | Path) -> list[ExperimentSpec]:
    path = Path(path)
    specs = []
    for f in sorted(path.glob("*.json")):
        specs.append(ExperimentSpec.from_dict(json.loads(f.read_text())))
    if not specs:
        raise ConfigError(f"no experiment specs found in {path}")
    return specs


def write_specs_dir(specs: list[ExperimentSpec], path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for s in specs:
        (path / f"row{int(s.id):02d}.json").write_text(
            json.dumps(s.to_dict(), indent=2, sort_keys=True) + "\n"
        )
