"""Classification and ranking metrics for link prediction."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyClass, EmptyQuerySet


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    auc: float
    mrr: float
    n_queries: int

    def to_dict(self) -> dict:
        return asdict(self)


def rank_of_positive(pos_score: float, neg_scores) -> float:
    """1-based rank of the positive among the negatives; ties count half."""
    neg = np.asarray(neg_scores, dtype=np.float64)
    if neg.size == 0:
        raise EmptyQuerySet("need at least one negative score")
    return 1.0 + float(np.sum(neg > pos_score)) + 0.5 * float(np.sum(neg == pos_score))


def mrr(ranks) -> float:
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise EmptyQuerySet("MRR of an empty query set")
    return float(np.mean(1.0 / r))


def auc(pos_scores, neg_scores) -> float:
    """Mann-Whitney AUC computed from midranks of the pooled scores."""
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise EmptyClass("AUC needs both positive and negative scores")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def accuracy_precision(scores_pos, scores_neg, threshold: float = 0.5):
    pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    neg = np.asarray(scores_neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise EmptyClass("accuracy/precision need both classes")
    tp = int(np.sum(pos >= threshold))
    fp = int(np.sum(neg >= threshold))
    tn = neg.size - fp
    accuracy = (tp + tn) / (pos.size + neg.size)
    precision = tp / (tp + fp) if tp + fp else 0.0
    return accuracy, precision


def report(pos_scores, neg_scores, ranks, threshold: float = 0.5) -> MetricsReport:
    acc, prec = accuracy_precision(pos_scores, neg_scores, threshold)
    return MetricsReport(acc, prec, auc(pos_scores, neg_scores), mrr(ranks), len(ranks))
