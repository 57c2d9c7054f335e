"""Grey relational analysis between deformation series."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class GreyConfig:
    rho: float = 0.5

    def __post_init__(self):
        if not 0.1 <= self.rho <= 1.0:
            raise ValidationError(f"rho must lie in [0.1, 1.0], got {self.rho}")


@dataclass
class SimilarityMatrix:
    labels: list
    values: np.ndarray

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["", *self.labels])
            for lab, row in zip(self.labels, self.values):
                w.writerow([lab, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path):
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        labels = rows[0][1:]
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls(labels, values)


def normalize(series):
    """Min-max scale to [0, 1]; a constant series maps to zeros."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValidationError("series must be one-dimensional with at least 2 points")
    if not np.all(np.isfinite(x)):
        raise ValidationError("series contains non-finite values")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def relation_coefficients(ref, cmp, rho=0.5):
    ref = np.asarray(ref, dtype=float)
    cmp = np.asarray(cmp, dtype=float)
    if ref.shape != cmp.shape:
        raise ValidationError(f"length mismatch: {ref.shape} vs {cmp.shape}")
    if not 0.1 <= rho <= 1.0:
        raise ValidationError(f"rho must lie in [0.1, 1.0], got {rho}")
    delta = np.abs(ref - cmp)
    dmax = delta.max()
    if dmax == 0.0:
        return np.ones_like(delta)
    return (delta.min() + rho * dmax) / (delta + rho * dmax)


def relation_degree(ref, cmp, cfg=GreyConfig()):
    """Grey relation degree of two raw series, each normalized on its own."""
    return float(np.mean(relation_coefficients(normalize(ref), normalize(cmp), cfg.rho)))


def similarity_matrix(series, cfg=GreyConfig(), labels=None):
    series = [np.asarray(s, dtype=float) for s in series]
    n = len(series)
    if n < 2:
        raise ValidationError("need at least 2 series")
    if len({len(s) for s in series}) != 1:
        raise ValidationError("all series must have equal length")
    normed = [normalize(s) for s in series]
    M = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            M[i, j] = M[j, i] = np.mean(relation_coefficients(normed[i], normed[j], cfg.rho))
    labels = list(labels) if labels is not None else [str(i) for i in range(n)]
    return SimilarityMatrix(labels, M)
