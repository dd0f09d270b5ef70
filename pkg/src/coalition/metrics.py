"""Cover comparison (overlapping NMI, Omega index) and bridge-node scores.

Covers are sequences of node sets over ``0..n-1``; communities may
overlap and need not cover every node.
"""
from dataclasses import asdict, dataclass
import json

import numpy as np


class MetricsDomainError(ValueError):
    pass


def _as_matrix(cover, n):
    cover = [frozenset(int(v) for v in c) for c in cover]
    if not cover:
        raise MetricsDomainError("cover has no communities")
    m = np.zeros((len(cover), n), dtype=bool)
    for k, c in enumerate(cover):
        if not c:
            raise MetricsDomainError("cover contains an empty community")
        if min(c) < 0 or max(c) >= n:
            raise MetricsDomainError(f"community has nodes outside 0..{n - 1}")
        m[k, list(c)] = True
    return m


def _h(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = -p[nz] * np.log2(p[nz])
    return out


def _conditional_norm(X, Y, n):
    """Mean over communities of X of ``H(X_k | Y) / H(X_k)``.

    ``H(X_k | Y)`` is the smallest ``H(X_k | Y_l)`` over the communities of Y
    that pass the agreement test ``h(P11) + h(P00) > h(P01) + h(P10)``, and
    ``H(X_k)`` itself when none does. Communities with ``H(X_k) = 0`` (the whole
    node set) contribute 0.
    """
    Xf = X.astype(np.float64)
    Yf = Y.astype(np.float64)
    a = Xf @ Yf.T  # in both
    sx = Xf.sum(axis=1)[:, None]
    sy = Yf.sum(axis=1)[None, :]
    p11 = a / n
    p10 = (sx - a) / n  # in X_k only
    p01 = (sy - a) / n  # in Y_l only
    p00 = 1.0 - p11 - p10 - p01
    hx = _h(sx[:, 0] / n) + _h(1.0 - sx[:, 0] / n)
    hy = _h(sy[0] / n) + _h(1.0 - sy[0] / n)
    joint = _h(p11) + _h(p10) + _h(p01) + _h(p00)
    cond = joint - hy[None, :]
    ok = _h(p11) + _h(p00) > _h(p01) + _h(p10)
    cond = np.where(ok, cond, np.inf)
    best = np.minimum(cond.min(axis=1), hx)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(hx > 0, best / np.where(hx > 0, hx, 1.0), 0.0)
    return float(ratio.mean())


def overlapping_nmi(a, b, n):
    """Normalised mutual information between two covers (base-2 logs).

    ``1 - (H(a|b)_norm + H(b|a)_norm) / 2`` with per-community conditional
    entropies matched to the best admissible community of the other cover.
    """
    A, B = _as_matrix(a, n), _as_matrix(b, n)
    value = 1.0 - 0.5 * (_conditional_norm(A, B, n) + _conditional_norm(B, A, n))
    return min(1.0, max(0.0, value))


def _pair_counts(cover, n):
    M = _as_matrix(cover, n).astype(np.int64)
    co = M.T @ M
    iu = np.triu_indices(n, k=1)
    return co[iu]


def omega_index(a, b, n):
    """Chance-adjusted agreement on how many communities each pair shares."""
    if n < 2:
        raise MetricsDomainError("omega needs at least two nodes")
    ta, tb = _pair_counts(a, n), _pair_counts(b, n)
    T = ta.size
    obs = float(np.count_nonzero(ta == tb)) / T
    top = int(max(ta.max(), tb.max())) + 1
    ca = np.bincount(ta, minlength=top).astype(np.float64)
    cb = np.bincount(tb, minlength=top).astype(np.float64)
    exp = float((ca * cb).sum()) / (T * T)
    if exp == 1.0:
        return 1.0 if obs == 1.0 else 0.0
    return (obs - exp) / (1.0 - exp)


@dataclass
class MetricsReport:
    nmi: float = None
    omega: float = None
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    accuracy: float = 0.0
    tpr: float = 0.0
    fpr: float = 0.0
    auc: float = 0.0
    precision: float = 0.0
    f1: float = 0.0

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def confusion_rates(tp, tn, fp, fn):
    """Bridge-detection indices from a confusion table (zero-division gives 0)."""
    total = tp + tn + fp + fn
    accuracy = (tp + tn) / total if total else 0.0
    tpr = tp / (tp + fn) if tp + fn else 0.0
    fpr = fp / (tn + fp) if tn + fp else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return {"accuracy": accuracy, "tpr": tpr, "fpr": fpr,
            "auc": (1.0 - fpr + tpr) / 2.0, "precision": precision, "f1": f1}


def bridge_confusion(pred, truth_bridges, n):
    """Confusion table and rates for predicted bridges (nodes in >= 2 communities).

    ``pred`` is a :class:`~coalition.stability.CommunityStructure` or a cover.
    """
    if hasattr(pred, "membership"):
        if pred.n != n:
            raise MetricsDomainError(f"prediction covers {pred.n} nodes, truth {n}")
        predicted = set(pred.bridge_nodes())
    else:
        counts = np.zeros(n, dtype=np.int64)
        for c in pred:
            for v in c:
                if not 0 <= v < n:
                    raise MetricsDomainError(f"node {v} outside 0..{n - 1}")
                counts[v] += 1
        predicted = set(np.flatnonzero(counts >= 2).tolist())
    truth = set(truth_bridges)
    if any(not 0 <= v < n for v in truth):
        raise MetricsDomainError("truth bridge node outside the node set")
    tp = len(predicted & truth)
    fp = len(predicted - truth)
    fn = len(truth - predicted)
    tn = n - tp - fp - fn
    report = MetricsReport(tp=tp, tn=tn, fp=fp, fn=fn)
    for k, v in confusion_rates(tp, tn, fp, fn).items():
        setattr(report, k, v)
    return report


def evaluate(pred, truth, truth_bridges, n):
    """Full :class:`MetricsReport` for a predicted cover against ground truth."""
    pred_cover = list(pred.communities) if hasattr(pred, "communities") else list(pred)
    report = bridge_confusion(pred_cover, truth_bridges, n)
    report.nmi = overlapping_nmi(pred_cover, truth, n)
    report.omega = omega_index(pred_cover, truth, n)
    return report
