"""Template captioner over known synthesis attributes.

Captions are "a <institution> headshot of a <attributes>", so every caption
for one institution shares the exact prefix used as the fine-tuning prompt.
"""

from __future__ import annotations

from mialab.errors import ConfigError

# institution tag -> prompt token
INSTITUTION_TOKENS = {"A": "instA", "B": "instB", "WILD": "wild"}

CAPTION_PREFIXES = {
    tag: f"a {tok} headshot of a" for tag, tok in INSTITUTION_TOKENS.items()
}

DEFAULT_TEMPLATE = "{prefix} {hair}-haired person"


def caption_text(institution: str, attrs: dict, template: str = DEFAULT_TEMPLATE) -> str:
    if institution not in CAPTION_PREFIXES:
        raise ConfigError(f"unknown institution tag {institution!r}")
    prefix = CAPTION_PREFIXES[institution]
    hair = attrs.get("hair")
    if hair is None:
        return f"{prefix} person"
    return template.format(prefix=prefix, hair=hair)


def caption(record, template: str = DEFAULT_TEMPLATE) -> str:
    """Caption a manifest record from its synthesis attributes."""
    return caption_text(record.source, record.attrs, template)


def prompt_for(institution: str) -> str:
    """Inference prompt for a fine-tuned model, e.g. "a instA headshot"."""
    if institution not in INSTITUTION_TOKENS:
        raise ConfigError(f"unknown institution tag {institution!r}")
    return f"a {INSTITUTION_TOKENS[institution]} headshot"
