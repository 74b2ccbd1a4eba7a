"""Anomaly scoring from the two hyperspheres, thresholded classification,
and ranking metrics with exact tie handling."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


PAPER_LITERAL = "paper-literal"
LOSS_CONSISTENT = "loss-consistent"


@dataclass
class ScoringConfig:
    beta: float = 0.5
    lam: float = 0.0
    mode: str = PAPER_LITERAL

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.mode not in (PAPER_LITERAL, LOSS_CONSISTENT):
            raise ValueError(f"unknown weighting mode {self.mode!r}")


@dataclass
class EvalResult:
    auc: float
    ap: float
    scores: np.ndarray
    predicted: np.ndarray

    def to_dict(self) -> dict:
        return {"auc": self.auc, "ap": self.ap}


def anomaly_score(zs: np.ndarray | None, za: np.ndarray | None,
                  sphere_s, sphere_a, cfg: ScoringConfig) -> np.ndarray:
    """Weighted signed squared-distance margins to the two sphere boundaries.

    paper-literal puts beta on the attribute term; loss-consistent puts beta on
    the structure term. A missing branch drops its term and the remaining
    weight renormalizes to 1.
    """
    terms = []
    if za is not None and sphere_a is not None:
        diff = za - sphere_a.center
        attr = np.einsum("ij,ij->i", diff, diff) - sphere_a.radius ** 2
        w = cfg.beta if cfg.mode == PAPER_LITERAL else 1.0 - cfg.beta
        terms.append((w, attr))
    if zs is not None and sphere_s is not None:
        diff = zs - sphere_s.center
        struct = np.einsum("ij,ij->i", diff, diff) - sphere_s.radius ** 2
        w = (1.0 - cfg.beta) if cfg.mode == PAPER_LITERAL else cfg.beta
        terms.append((w, struct))
    if not terms:
        raise MetricError("no sphere terms available for scoring")
    if len(terms) == 1:
        return terms[0][1].copy()
    return sum(w * t for w, t in terms)


def classify(scores: np.ndarray, lam: float = 0.0) -> np.ndarray:
    """Label 1 (anomalous) iff score >= lam; the boundary is inclusive."""
    return (np.asarray(scores) >= lam).astype(np.int64)


def auc(scores, labels) -> float:
    """Probability that a random anomaly outscores a random normal node,
    counting ties as half (Mann-Whitney statistic)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = int(labels.sum())
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise MetricError("auc needs at least one positive and one negative")
    ranks = rankdata(scores)  # average ranks give the half-credit for ties
    return float((ranks[labels == 1].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def average_precision(scores, labels) -> float:
    """AP over the descending-score ranking; ties broken by original index."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = int(labels.sum())
    if pos == 0:
        raise MetricError("average_precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = 0
    total = 0.0
    for k, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            total += hits / k
    return total / pos
