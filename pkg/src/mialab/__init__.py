"""Desk-scale membership inference lab for fine-tuned latent diffusion models.

Pipeline: procedural face corpora (synthdata) -> tiny conditional latent
diffusion target model (ldm) -> binary membership classifier (attack) ->
AUC / confidence-interval / FID evaluation (metrics), orchestrated by a
declarative experiment matrix (experiments) behind a single CLI (cli).
"""

__version__ = "0.1.0"
