"""Versioned, self-describing model files (JSON documents)."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .evaluation import MODEL_NB, MODEL_SVM, MODEL_TREE
from .naive_bayes import BernoulliNaiveBayes
from .ocsvm import LinearOneClassSvm
from .tree import DecisionTreeClassifier

MODEL_FORMAT = "pkgwatch-model"
MODEL_FORMAT_VERSION = 1

_KIND_TO_CLASS = {
    MODEL_TREE: DecisionTreeClassifier,
    MODEL_NB: BernoulliNaiveBayes,
    MODEL_SVM: LinearOneClassSvm,
}
_CLASS_TO_KIND = {cls: kind for kind, cls in _KIND_TO_CLASS.items()}


def model_kind(model: Any) -> str:
    try:
        return _CLASS_TO_KIND[type(model)]
    except KeyError:
        raise TypeError(f"not a serializable model: {type(model).__name__}") from None


def model_document(model: Any, metadata: dict[str, Any] | None = None) -> dict[str, Any]:
    return {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model_kind(model),
        "model": model.to_dict(),
        "metadata": {
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            **(metadata or {}),
        },
    }


def save_model(model: Any, path: str | Path, metadata: dict[str, Any] | None = None) -> None:
    doc = model_document(model, metadata)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> Any:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model file: {path}")
    kind = doc.get("kind")
    if kind not in _KIND_TO_CLASS:
        raise ValueError(f"unknown model kind: {kind!r}")
    return _KIND_TO_CLASS[kind].from_dict(doc["model"])
