"""Minimal sklearn-compatible estimator base and input validation helpers.

Estimators follow the familiar conventions: constructor arguments are
hyperparameters mirrored as attributes, state learned by ``fit`` gets a
trailing underscore, ``fit`` returns ``self``, and ``get_params`` /
``set_params`` allow composition with pipeline/search tooling that speaks
the same protocol.
"""

from __future__ import annotations

import inspect
from typing import Any

import numpy as np

from ..errors import SchemaMismatch
from ..vectorize import BENIGN, MALICIOUS


class BaseEstimator:
    """get_params/set_params backed by the subclass __init__ signature."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params: Any) -> "BaseEstimator":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Validate a 2-D finite float matrix; 1-D input becomes a single row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {X.ndim} dimensions")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise SchemaMismatch(
            f"expected {n_features} columns, got {X.shape[1]}"
        )
    return X


def check_labels(y, n_rows: int) -> np.ndarray:
    """Validate labels as an array of {malicious, benign} strings."""
    y = np.asarray(y, dtype=object)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if len(y) != n_rows:
        raise ValueError(f"{n_rows} rows but {len(y)} labels")
    bad = {v for v in y if v not in (MALICIOUS, BENIGN)}
    if bad:
        raise ValueError(f"unknown labels: {sorted(map(str, bad))}")
    return y


def check_schema(
    trained_schema: tuple[str, ...] | None, schema: tuple[str, ...] | None
) -> None:
    """Reject prediction input whose schema differs from training."""
    if trained_schema is not None and schema is not None:
        if tuple(schema) != tuple(trained_schema):
            raise SchemaMismatch(
                f"row schema {list(schema)} does not match training schema"
            )


def labels_to_binary(y: np.ndarray) -> np.ndarray:
    """malicious -> 1, benign -> 0."""
    return np.fromiter((1 if v == MALICIOUS else 0 for v in y), dtype=int, count=len(y))


def binary_to_labels(bits: np.ndarray) -> np.ndarray:
    return np.asarray([MALICIOUS if b else BENIGN for b in bits], dtype=object)
