"""Membership attack model: residual conv classifier over 32x32 images."""

from mialab.attack.model import AttackCheckpoint, AttackClassifier, predict, predict_manifest
from mialab.attack.train import AttackTrainConfig, AttackTrainSet, train_attack

__all__ = [
    "AttackCheckpoint",
    "AttackClassifier",
    "AttackTrainConfig",
    "AttackTrainSet",
    "predict",
    "predict_manifest",
    "train_attack",
]
