"""Top-k match reports and the pointwise-distance nearest-template baseline.

Ground truth is class-id equality across the two modality datasets; the
evaluator refuses dataset pairs whose class-id sets differ.  Ranking ties
break toward the lower class id so reports are deterministic.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .adapter import AdapterParams, adapt_matrix
from .errors import ValidationError
from .matrix import Dataset
from .swim import dpw_distance_matrix


@dataclass(frozen=True)
class ItemMatches:
    """Ranked seen-modality candidates for one emerging item."""

    emerging_class: int
    ranked: tuple  # ((seen class id, distance), ...) ascending

    def __post_init__(self):
        object.__setattr__(
            self, "ranked", tuple((int(c), float(d)) for c, d in self.ranked))


@dataclass(frozen=True)
class MatchReport:
    """Per-item rankings truncated to k, plus overall top-1/top-5 accuracy."""

    items: tuple
    top1: float
    top5: float
    k: int


def _build_report(dist, seen_ids, emerging_ids, k) -> MatchReport:
    n_seen = len(seen_ids)
    order_ids = np.asarray(seen_ids)
    items = []
    hits1 = hits5 = 0
    for j, cid in enumerate(emerging_ids):
        col = dist[:, j]
        order = sorted(range(n_seen), key=lambda i: (col[i], order_ids[i]))
        ranked = tuple((int(order_ids[i]), float(col[i])) for i in order)
        if ranked[0][0] == cid:
            hits1 += 1
        if any(c == cid for c, _ in ranked[:min(5, n_seen)]):
            hits5 += 1
        items.append(ItemMatches(int(cid), ranked[:k]))
    n = len(emerging_ids)
    return MatchReport(tuple(items), hits1 / n, hits5 / n, k)


def _check_datasets(seen: Dataset, emerging: Dataset, k: int) -> int:
    if set(seen.class_ids) != set(emerging.class_ids):
        raise ValidationError("seen and emerging datasets must share one class-id set")
    if seen.channels != emerging.channels:
        raise ValidationError(
            f"channel mismatch: {seen.channels} vs {emerging.channels}")
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > seen.size:
        warnings.warn(f"k={k} exceeds dataset size {seen.size}; clamping", stacklevel=3)
        k = seen.size
    return k


def match_topk(seen: Dataset, emerging: Dataset, params: AdapterParams,
               k: int = 5, workers: int | None = None) -> MatchReport:
    """Rank every emerging item against all seen templates by alignment distance.

    Every emerging matrix is adapted with ``params`` first; rankings are by
    ascending dpw distance.  Accuracies always come from the full ranking,
    ``k`` only truncates the stored per-item lists.
    """
    k = _check_datasets(seen, emerging, k)
    adapted = [adapt_matrix(params, m) for m in emerging.matrices]
    dist = dpw_distance_matrix(seen.matrices, adapted, workers)
    return _build_report(dist, seen.class_ids, emerging.class_ids, k)


def knn_baseline(seen: Dataset, emerging: Dataset, params: AdapterParams,
                 k: int = 5) -> MatchReport:
    """Same pipeline as match_topk but ranked by pointwise L1 distance.

    Requires every matrix in both datasets to share one (H, W, C) shape,
    since the entrywise distance has no notion of alignment.
    """
    k = _check_datasets(seen, emerging, k)
    shapes = {m.shape for m in seen.matrices} | {m.shape for m in emerging.matrices}
    if len(shapes) != 1:
        raise ValidationError(f"pointwise baseline needs one common shape, got {sorted(shapes)}")
    adapted = [adapt_matrix(params, m) for m in emerging.matrices]
    dist = np.empty((seen.size, emerging.size))
    for i, s in enumerate(seen.matrices):
        for j, e in enumerate(adapted):
            dist[i, j] = np.abs(s.data - e.data).sum()
    return _build_report(dist, seen.class_ids, emerging.class_ids, k)


def track_immediate(seen: Dataset, emerging: Dataset, params: AdapterParams,
                    workers: int | None = None) -> tuple[float, float]:
    """Top-1/top-5 accuracy of one adapter snapshot (for iteration traces)."""
    report = match_topk(seen, emerging, params, k=min(5, seen.size), workers=workers)
    return report.top1, report.top5


def report_json(report: MatchReport) -> str:
    """Full ranked lists as a JSON document."""
    doc = {
        "k": report.k,
        "top1": report.top1,
        "top5": report.top5,
        "items": [
            {
                "emerging_class": item.emerging_class,
                "ranked": [{"seen_class": c, "distance": d} for c, d in item.ranked],
            }
            for item in report.items
        ],
    }
    return json.dumps(doc, indent=2)


def report_csv_lines(report: MatchReport) -> list[str]:
    """Summary metrics as `metric,value` lines."""
    return [
        "metric,value",
        f"top1,{report.top1!r}",
        f"top5,{report.top5!r}",
        f"k,{report.k}",
        f"items,{len(report.items)}",
    ]
