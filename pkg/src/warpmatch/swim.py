"""Outer self-reinforcing loop: grow the candidate pair set, refine, repeat.

Every outer iteration rebuilds the candidate set from scratch: among the
still-unassigned emerging matrices it greedily takes the one whose best
alignment distance to any seen matrix (under the current adapter) is
smallest, pairs it with that seen matrix, and once the set has reached
its per-iteration quota hands it to the inner loop.  The quota grows by
``alpha`` per iteration and clamps at N, so the loop runs exactly
ceil(N / alpha) times.

The distance-matrix driver batches all pairs that share matrix shapes
through one vectorized DP and can fan out over processes; results are
identical for any worker count or chunking.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .adapter import TrainConfig, adapt_matrix, init_adapter
from .dtw import accumulate_final
from .errors import ValidationError
from .matrix import as_feature_array
from .sloma import MatchedPairSet, run_sloma

# Cap on the element-distance block materialized per chunk (float64 count).
_CHUNK_BUDGET = 3_000_000


@dataclass(frozen=True)
class SwimConfig:
    """Knobs of the outer loop."""

    alpha: int = 1
    eps: float = 1e-3
    hidden: int = 64
    dropout_p: float = 0.2
    train: TrainConfig = field(default_factory=TrainConfig)
    max_sloma_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 1:
            raise ValidationError("alpha must be >= 1")
        if self.eps <= 0:
            raise ValidationError("eps must be positive")
        if self.hidden < 1:
            raise ValidationError("hidden size must be >= 1")


@dataclass(frozen=True)
class SwimStep:
    """One outer iteration: the pair set built, its selection distances
    (nondecreasing by construction), accuracies when truth was supplied,
    and the inner-loop trace."""

    iteration: int
    n_pairs: int
    pairs: MatchedPairSet
    pair_distances: tuple
    top1: float | None
    top5: float | None
    inner: tuple


def swim_trace_csv_lines(steps) -> list[str]:
    lines = ["T,n,top1,top5"]
    for s in steps:
        top1 = "" if s.top1 is None else repr(s.top1)
        top5 = "" if s.top5 is None else repr(s.top5)
        lines.append(f"{s.iteration},{s.n_pairs},{top1},{top5}")
    return lines


# ---------------------------------------------------------------------------
# Distance-matrix driver

def _block_distances(arrs_a, arrs_b) -> np.ndarray:
    """Alignment distances for every (a, b) matrix pair, grouped by shape."""
    out = np.empty((len(arrs_a), len(arrs_b)))
    groups_a: dict[tuple, list[int]] = {}
    for i, a in enumerate(arrs_a):
        groups_a.setdefault(a.shape[:2], []).append(i)
    groups_b: dict[tuple, list[int]] = {}
    for j, b in enumerate(arrs_b):
        groups_b.setdefault(b.shape[:2], []).append(j)
    for (hs, ws), ia in groups_a.items():
        stack_a = np.stack([arrs_a[i] for i in ia])
        rows_a = stack_a.reshape(len(ia) * hs, ws, stack_a.shape[3])
        for (he, we), jb in groups_b.items():
            c = arrs_b[jb[0]].shape[2]
            per_b = ws * we * len(ia) * hs * he
            chunk = max(1, _CHUNK_BUDGET // max(per_b, 1))
            for start in range(0, len(jb), chunk):
                jchunk = jb[start:start + chunk]
                nb = len(jchunk)
                stack_b = np.stack([arrs_b[j] for j in jchunk])
                rows_b = stack_b.reshape(nb * he, we, c)
                d = cdist(rows_a.reshape(-1, c), rows_b.reshape(-1, c))
                vol = d.reshape(len(ia) * hs, ws, nb * he, we).transpose(1, 3, 0, 2)
                vol = np.ascontiguousarray(vol).reshape(ws, we, -1)
                row_costs = accumulate_final(vol).reshape(len(ia), hs, nb, he)
                hier_vol = np.ascontiguousarray(
                    row_costs.transpose(1, 3, 0, 2)).reshape(hs, he, -1)
                dists = accumulate_final(hier_vol).reshape(len(ia), nb)
                for bi, j in enumerate(jchunk):
                    out[ia, j] = dists[:, bi]
    return out


def _block_worker(args):
    arrs_a, arrs_b = args
    return _block_distances(arrs_a, arrs_b)


def dpw_distance_matrix(seen, emerging, workers: int | None = None) -> np.ndarray:
    """Alignment distance between every seen and every emerging matrix.

    Entry (i, j) equals ``dpw(seen[i], emerging[j])[0]`` exactly; evaluation
    order, batching and the worker count never change the result.  ``workers``
    defaults to the WARPMATCH_WORKERS environment variable, then 1.
    """
    arrs_a = [as_feature_array(m) for m in seen]
    arrs_b = [as_feature_array(m) for m in emerging]
    if not arrs_a or not arrs_b:
        raise ValidationError("distance matrix needs nonempty matrix sets")
    channels = {a.shape[2] for a in arrs_a} | {b.shape[2] for b in arrs_b}
    if len(channels) != 1:
        raise ValidationError(f"channel mismatch across matrices: {sorted(channels)}")
    if workers is None:
        workers = int(os.environ.get("WARPMATCH_WORKERS", "1"))
    workers = max(1, min(workers, len(arrs_b)))
    if workers == 1:
        return _block_distances(arrs_a, arrs_b)
    bounds = np.linspace(0, len(arrs_b), workers + 1).astype(int)
    jobs = [(arrs_a, arrs_b[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(_block_worker, jobs))
    return np.hstack(blocks)


# ---------------------------------------------------------------------------
# Outer loop

def _greedy_pairs(dist: np.ndarray, n: int) -> tuple[MatchedPairSet, tuple]:
    """Pick n emerging matrices by ascending best distance; ties take the
    lowest index.  Each is paired with its closest seen matrix."""
    best = dist.min(axis=0)
    best_seen = dist.argmin(axis=0)
    taken = np.zeros(dist.shape[1], dtype=bool)
    pairs = []
    dists = []
    for _ in range(n):
        masked = np.where(taken, np.inf, best)
        l = int(masked.argmin())
        pairs.append((int(best_seen[l]), l))
        dists.append(float(best[l]))
        taken[l] = True
    return MatchedPairSet(tuple(pairs)), tuple(dists)


def _topk_hits(dist: np.ndarray, truth, ks=(1, 5)) -> tuple:
    """Fraction of emerging columns whose true seen row ranks within k."""
    n_seen, n_em = dist.shape
    hits = {k: 0 for k in ks}
    for l in range(n_em):
        col = dist[:, l]
        t = truth[l]
        rank = int((col < col[t]).sum() + (col[:t] == col[t]).sum())
        for k in ks:
            if rank < min(k, n_seen):
                hits[k] += 1
    return tuple(hits[k] / n_em for k in ks)


def run_swim(seen, emerging, cfg: SwimConfig, truth=None, workers: int | None = None):
    """Match two equally sized modality sets end to end.

    Parameters
    ----------
    seen, emerging : sequences of FeatureMatrix (or arrays), same length N
    cfg : SwimConfig
    truth : optional sequence of int
        ``truth[l]`` is the seen index that emerging matrix l should match;
        when given, every outer iteration records top-1/top-5 accuracy under
        the freshly trained adapter.
    workers : worker count for the distance-matrix driver.

    Returns
    -------
    (assignment, params, steps)
        The final pair set (n == N), the final adapter params, and the
        per-iteration trace.
    """
    n_total = len(seen)
    if n_total == 0 or len(emerging) != n_total:
        raise ValidationError("seen and emerging sets must be nonempty and equally sized")
    if cfg.alpha > n_total:
        raise ValidationError(f"alpha {cfg.alpha} exceeds set size {n_total}")
    channels = as_feature_array(seen[0]).shape[2]
    params = init_adapter(channels, cfg.hidden, seed=cfg.seed,
                          dropout_p=cfg.dropout_p, pass_through=True)

    dist = dpw_distance_matrix(seen, [adapt_matrix(params, m) for m in emerging], workers)
    steps: list[SwimStep] = []
    pairs = None
    t_outer = 0
    while True:
        t_outer += 1
        n_t = min(cfg.alpha * t_outer, n_total)
        pairs, sel_dists = _greedy_pairs(dist, n_t)
        params, inner = run_sloma(seen, emerging, pairs, params,
                                  cfg.eps, cfg.train, cfg.max_sloma_iters)
        dist = dpw_distance_matrix(seen, [adapt_matrix(params, m) for m in emerging], workers)
        top1 = top5 = None
        if truth is not None:
            top1, top5 = _topk_hits(dist, truth)
        steps.append(SwimStep(t_outer, n_t, pairs, sel_dists, top1, top5, tuple(inner)))
        if n_t == n_total:
            break
    return pairs, params, steps
