"""Single-version feature extraction from a decoded package artifact.

Ten numbers per version: seven API/syntax pattern counts, the number of
install-time scripts declared in the manifest, and the mean and population
standard deviation of per-file Shannon entropy across all files.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .artifact import Manifest, PackageArtifact, source_files
from .patterns import COUNT_FEATURES, DEFAULT_PATTERN_TABLE, PatternTable, count_matches
from .tokens import TokenizeError

logger = logging.getLogger(__name__)

#: Canonical field order; the vectorizer and encoders rely on it.
FEATURE_FIELDS = COUNT_FEATURES + ("install_scripts", "entropy_mean", "entropy_std")

#: Manifest script keys that run automatically at install time.
INSTALL_SCRIPT_KEYS = ("preinstall", "install", "postinstall")


@dataclass(frozen=True)
class FeatureVector:
    """Features of one package version (see FEATURE_FIELDS for order)."""

    pii_access: int = 0
    fs_access: int = 0
    process_creation: int = 0
    network_access: int = 0
    crypto_api: int = 0
    data_encoding: int = 0
    dynamic_code: int = 0
    install_scripts: int = 0
    entropy_mean: float = 0.0
    entropy_std: float = 0.0

    def __post_init__(self) -> None:
        for name in FEATURE_FIELDS[:8]:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.install_scripts > len(INSTALL_SCRIPT_KEYS):
            raise ValueError("install_scripts exceeds the number of script keys")
        if not 0.0 <= self.entropy_mean <= 8.0:
            raise ValueError("entropy_mean out of [0, 8]")
        if self.entropy_std < 0.0:
            raise ValueError("entropy_std must be >= 0")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, name)) for name in FEATURE_FIELDS)


def shannon_entropy(content: bytes) -> float:
    """Shannon entropy of the byte-value distribution, in bits per byte.

    Empty input yields 0. Bounded by [0, 8].
    """
    if not content:
        return 0.0
    counts = np.bincount(np.frombuffer(content, dtype=np.uint8), minlength=256)
    probs = counts[counts > 0] / len(content)
    return float(-np.sum(probs * np.log2(probs)))


def entropy_stats(artifact: PackageArtifact) -> tuple[float, float]:
    """Mean and population std of per-file entropy over all files.

    All files participate, binaries included. Zero files yields (0, 0);
    a single file yields (its entropy, 0).
    """
    if not artifact.files:
        return 0.0, 0.0
    entropies = [shannon_entropy(f.content) for f in artifact.files]
    mean = math.fsum(entropies) / len(entropies)
    variance = math.fsum((e - mean) ** 2 for e in entropies) / len(entropies)
    return mean, math.sqrt(variance)


def count_install_scripts(manifest: Manifest) -> int:
    """Number of preinstall/install/postinstall keys with non-empty commands."""
    return sum(
        1
        for key in INSTALL_SCRIPT_KEYS
        if isinstance(manifest.scripts.get(key), str) and manifest.scripts[key].strip()
    )


def extract_features(
    artifact: PackageArtifact,
    table: PatternTable = DEFAULT_PATTERN_TABLE,
) -> FeatureVector:
    """Extract the full feature vector for one package version.

    Pattern counts sum rule matches over all source files; files that fail
    to decode or tokenize contribute zero matches and a warning. Entropy
    statistics cover every file in the artifact, source or not.
    """
    totals = dict.fromkeys(COUNT_FEATURES, 0)
    for entry in source_files(artifact):
        try:
            text = entry.content.decode("utf-8")
        except UnicodeDecodeError:
            logger.warning("skipping non-UTF-8 source file: %s", entry.path)
            continue
        try:
            counts = count_matches(text, table)
        except TokenizeError as exc:
            logger.warning("skipping untokenizable file %s: %s", entry.path, exc)
            continue
        for feature, value in counts.items():
            totals[feature] += value

    mean, std = entropy_stats(artifact)
    return FeatureVector(
        **totals,
        install_scripts=count_install_scripts(artifact.manifest),
        entropy_mean=mean,
        entropy_std=std,
    )
