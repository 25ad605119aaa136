"""Dynamic time warping over sequences of feature elements.

The accumulated-cost table is always kept in full because the hierarchical
aligner backtracks through interior prefix values.  The same accumulation
kernel also powers the hierarchical (row-level) recurrence and the batched
distance-matrix driver: it runs one alignment DP over a whole batch of
problems at once, which is what makes plain numpy fast enough here.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError


def _as_rows(row) -> np.ndarray:
    arr = np.asarray(row, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError("expected a nonempty sequence of feature elements")
    return arr


def accumulate_tables(vol: np.ndarray) -> np.ndarray:
    """Accumulated-cost tables for a batch of alignment problems.

    ``vol[i, j, b]`` is the local cost of pairing position i with position j
    in problem b.  Returns an array of the same shape obeying the running-sum
    boundary cases and the interior recurrence
    ``acc[i, j] = min(acc[i-1, j-1], acc[i-1, j], acc[i, j-1]) + vol[i, j]``.
    """
    n, m, _ = vol.shape
    acc = np.empty_like(vol)
    acc[0, 0] = vol[0, 0]
    for i in range(1, n):
        np.add(acc[i - 1, 0], vol[i, 0], out=acc[i, 0])
    for j in range(1, m):
        np.add(acc[0, j - 1], vol[0, j], out=acc[0, j])
    for i in range(1, n):
        prev = acc[i - 1]
        cur = acc[i]
        loc = vol[i]
        for j in range(1, m):
            best = np.minimum(prev[j - 1], prev[j])
            np.minimum(best, cur[j - 1], out=best)
            np.add(best, loc[j], out=cur[j])
    return acc


def accumulate_final(vol: np.ndarray) -> np.ndarray:
    """Final accumulated cost per batch entry, without keeping the tables.

    Same recurrence as :func:`accumulate_tables`, two rolling rows of memory.
    """
    n, m, nb = vol.shape
    prev = np.empty((m, nb), dtype=vol.dtype)
    prev[0] = vol[0, 0]
    for j in range(1, m):
        np.add(prev[j - 1], vol[0, j], out=prev[j])
    if n == 1:
        return prev[m - 1].copy()
    cur = np.empty_like(prev)
    for i in range(1, n):
        np.add(prev[0], vol[i, 0], out=cur[0])
        for j in range(1, m):
            best = np.minimum(prev[j - 1], prev[j])
            np.minimum(best, cur[j - 1], out=best)
            np.add(best, vol[i, j], out=cur[j])
        prev, cur = cur, prev
    return prev[m - 1].copy()


def element_cost_volume(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distances between all element pairs of two (H, W, C) stacks.

    Returned as a (Wa, Wb, Ha*Hb) volume: one alignment problem per row pair,
    laid out so that problem ``h_a * Hb + h_b`` aligns row h_a of ``a`` with
    row h_b of ``b``.
    """
    ha, wa, c = a.shape
    hb, wb, _ = b.shape
    d = cdist(a.reshape(ha * wa, c), b.reshape(hb * wb, c))
    vol = d.reshape(ha, wa, hb, wb).transpose(1, 3, 0, 2)
    return np.ascontiguousarray(vol).reshape(wa, wb, ha * hb)


def dtw(row_a, row_b) -> tuple[float, np.ndarray]:
    """Dynamic time warping distance between two element sequences.

    Parameters
    ----------
    row_a, row_b : array-like
        Sequences of feature elements, shape (n, C); 1-D input is treated
        as a scalar sequence.

    Returns
    -------
    (distance, table)
        ``distance`` is the alignment cost; ``table`` is the full read-only
        accumulated-cost matrix with ``table[i, j]`` the cost of aligning the
        first i+1 elements of ``row_a`` with the first j+1 of ``row_b``.
    """
    a = _as_rows(row_a)
    b = _as_rows(row_b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError(f"channel mismatch: {a.shape[1]} vs {b.shape[1]}")
    vol = cdist(a, b)[:, :, None]
    table = accumulate_tables(vol)[:, :, 0]
    table.flags.writeable = False
    return float(table[-1, -1]), table


def dtw_path(table: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost warping path recovered from an accumulated-cost table.

    Returns 0-based (i, j) index pairs from (0, 0) to the last cell.  Ties
    prefer the diagonal predecessor, then stepping back in the first index,
    then in the second.
    """
    n, m = table.shape
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i or j:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = (i - 1, j - 1)
            value = table[best]
            for cand in ((i - 1, j), (i, j - 1)):
                if table[cand] < value:
                    best, value = cand, table[cand]
            i, j = best
        path.append((i, j))
    path.reverse()
    return path
