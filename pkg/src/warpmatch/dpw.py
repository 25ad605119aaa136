"""Dynamic position warping: order-preserving alignment of 2D feature matrices.

The aligner pairs rows of the two matrices first (the hierarchical level)
and elements within each paired row second; both levels obey boundary,
monotonicity and unit-step constraints.  The minimum total element cost is
the dpw distance, and the two-level path achieving it is recovered by
backtracking through the stored tables.

Index convention: hierarchical path nodes carry 1-based indices in the
data model; everything internal is 0-based and converted at the boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dtw import accumulate_final, accumulate_tables, dtw_path, element_cost_volume
from .errors import ValidationError
from .matrix import as_feature_array

_STEPS = ((1, 1), (1, 0), (0, 1))


@dataclass(frozen=True)
class PathNode:
    """One paired row (hs, he) and its within-row element pairs, 1-based."""

    hs: int
    he: int
    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "cols", tuple((int(a), int(b)) for a, b in self.cols))


@dataclass(frozen=True)
class HiPa:
    """Hierarchical warping path: a sequence of paired rows with element pairs."""

    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_aligned(self) -> int:
        """Total number of aligned element pairs."""
        return sum(len(node.cols) for node in self.nodes)

    def aligned_pairs(self):
        """Yield (hs, ws, he, we) tuples, 1-based, in path order."""
        for node in self.nodes:
            for ws, we in node.cols:
                yield node.hs, ws, node.he, we


@dataclass(frozen=True, eq=False)
class DpwTables:
    """Intermediate tables of one dpw run, retained for backtracking.

    ``hier_acc[h, e]`` is the minimum alignment cost of the first h+1 rows of
    the first matrix against the first e+1 rows of the second.  ``row_tables``
    holds the per-row-pair accumulated DTW tables as a (Ws, We, Hs, He) volume;
    it is None when the run was asked not to keep them, in which case tables
    are recomputed on demand from the stored matrices.
    """

    hier_acc: np.ndarray
    row_tables: np.ndarray | None
    source: np.ndarray
    target: np.ndarray

    @property
    def distance(self) -> float:
        return float(self.hier_acc[-1, -1])

    @property
    def shape_s(self) -> tuple[int, int]:
        return self.source.shape[0], self.source.shape[1]

    @property
    def shape_e(self) -> tuple[int, int]:
        return self.target.shape[0], self.target.shape[1]

    def row_table(self, h: int, e: int) -> np.ndarray:
        """Accumulated DTW table for row h of the source vs row e of the target."""
        if self.row_tables is not None:
            return self.row_tables[:, :, h, e]
        vol = cdist(self.source[h], self.target[e])[:, :, None]
        return accumulate_tables(vol)[:, :, 0]


def dpw(s, e, keep_row_tables: bool = True) -> tuple[float, DpwTables]:
    """Dynamic position warping distance between two feature matrices.

    Parameters
    ----------
    s, e : FeatureMatrix or array-like
        Matrices of shape (H, W, C) with a shared channel count; 2-D input
        is treated as scalar-element (C=1).
    keep_row_tables : bool
        Keep all Hs*He per-row-pair DTW tables for backtracking (the
        default).  With False only the hierarchical table is stored and
        backtracking recomputes row tables on demand, trading time for
        memory on large inputs.

    Returns
    -------
    (distance, tables)
    """
    a = as_feature_array(s)
    b = as_feature_array(e)
    if a.shape[2] != b.shape[2]:
        raise ValidationError(f"channel mismatch: {a.shape[2]} vs {b.shape[2]}")
    hs, ws = a.shape[0], a.shape[1]
    he, we = b.shape[0], b.shape[1]
    vol = element_cost_volume(a, b)
    if keep_row_tables:
        acc = accumulate_tables(vol)
        row_costs = acc[-1, -1]
        row_tables = acc.reshape(ws, we, hs, he)
    else:
        row_costs = accumulate_final(vol)
        row_tables = None
    hier = accumulate_tables(row_costs.reshape(hs, he, 1))[:, :, 0]
    tables = DpwTables(hier, row_tables, a, b)
    return float(hier[-1, -1]), tables


def optimal_hipa(s, e, tables: DpwTables | None = None) -> HiPa:
    """Minimum-cost hierarchical warping path between two feature matrices.

    ``tables`` must come from ``dpw(s, e)``; when omitted it is computed
    here.  Ties prefer the diagonal predecessor, then the row/element of
    the first matrix, then of the second.
    """
    a = as_feature_array(s)
    b = as_feature_array(e)
    if tables is None:
        _, tables = dpw(s, e)
    if tables.shape_s != (a.shape[0], a.shape[1]) or tables.shape_e != (b.shape[0], b.shape[1]):
        raise ValidationError("tables do not match the given matrices")

    first_level = _backtrack(tables.hier_acc)
    nodes = []
    for h, e0 in first_level:
        cols = tuple((i + 1, j + 1) for i, j in dtw_path(tables.row_table(h, e0)))
        nodes.append(PathNode(h + 1, e0 + 1, cols))
    return HiPa(tuple(nodes))


def _backtrack(acc: np.ndarray) -> list[tuple[int, int]]:
    # Same traversal as dtw_path; shared here for the hierarchical level.
    return dtw_path(acc)


def path_cost(s, e, hipa: HiPa) -> float:
    """Total element distance accumulated along a hierarchical warping path.

    The path is validated against the matrix dimensions first; an invalid
    path raises ValidationError naming the first violated condition.
    """
    a = as_feature_array(s)
    b = as_feature_array(e)
    violations = validate_hipa(hipa, (a.shape[0], a.shape[1]), (b.shape[0], b.shape[1]))
    if violations:
        raise ValidationError(violations[0])
    total = 0.0
    for node in hipa.nodes:
        row_s = a[node.hs - 1]
        row_e = b[node.he - 1]
        iw = np.fromiter((ws - 1 for ws, _ in node.cols), dtype=np.intp)
        je = np.fromiter((we - 1 for _, we in node.cols), dtype=np.intp)
        diff = row_s[iw] - row_e[je]
        total += float(np.sqrt((diff * diff).sum(axis=1)).sum())
    return total


def validate_hipa(hipa: HiPa, shape_s, shape_e) -> list[str]:
    """Check a hierarchical path against the three path conditions.

    Returns a list of human-readable violations (empty when the path is
    valid): boundary (must span both matrices completely), monotonicity
    (indices never decrease) and step size (unit steps only), plus plain
    index-range checks.
    """
    hs_max, ws_max = int(shape_s[0]), int(shape_s[1])
    he_max, we_max = int(shape_e[0]), int(shape_e[1])
    out = []
    nodes = hipa.nodes
    if not nodes:
        return ["boundary: path has no row nodes"]

    for l, node in enumerate(nodes, 1):
        if not (1 <= node.hs <= hs_max and 1 <= node.he <= he_max):
            out.append(f"range: row node {l} ({node.hs},{node.he}) outside "
                       f"[1,{hs_max}]x[1,{he_max}]")
        if not node.cols:
            out.append(f"boundary: row node {l} has no element pairs")
            continue
        for k, (ws, we) in enumerate(node.cols, 1):
            if not (1 <= ws <= ws_max and 1 <= we <= we_max):
                out.append(f"range: element node {k} of row node {l} ({ws},{we}) "
                           f"outside [1,{ws_max}]x[1,{we_max}]")

    if nodes[0].hs != 1 or nodes[0].he != 1:
        out.append(f"boundary: first row node is ({nodes[0].hs},{nodes[0].he}), expected (1,1)")
    if nodes[-1].hs != hs_max or nodes[-1].he != he_max:
        out.append(f"boundary: last row node is ({nodes[-1].hs},{nodes[-1].he}), "
                   f"expected ({hs_max},{he_max})")
    for l, node in enumerate(nodes, 1):
        if node.cols:
            if node.cols[0] != (1, 1):
                out.append(f"boundary: row node {l} starts at {node.cols[0]}, expected (1,1)")
            if node.cols[-1] != (ws_max, we_max):
                out.append(f"boundary: row node {l} ends at {node.cols[-1]}, "
                           f"expected ({ws_max},{we_max})")

    for l in range(1, len(nodes)):
        dh = nodes[l].hs - nodes[l - 1].hs
        de = nodes[l].he - nodes[l - 1].he
        if dh < 0 or de < 0:
            out.append(f"monotonicity: row node {l + 1} steps backwards ({dh},{de})")
        if (dh, de) not in _STEPS:
            out.append(f"step size: row node {l + 1} delta ({dh},{de}) not in "
                       "{(1,0),(0,1),(1,1)}")
    for l, node in enumerate(nodes, 1):
        for k in range(1, len(node.cols)):
            dw = node.cols[k][0] - node.cols[k - 1][0]
            dv = node.cols[k][1] - node.cols[k - 1][1]
            if dw < 0 or dv < 0:
                out.append(f"monotonicity: element node {k + 1} of row node {l} "
                           f"steps backwards ({dw},{dv})")
            if (dw, dv) not in _STEPS:
                out.append(f"step size: element node {k + 1} of row node {l} delta "
                           f"({dw},{dv}) not in {{(1,0),(0,1),(1,1)}}")
    return out


def lattice_paths(n: int, m: int) -> list[tuple]:
    """All monotone unit-step paths from (1,1) to (n,m), as 1-based tuples."""
    if n < 1 or m < 1:
        raise ValidationError("lattice dimensions must be >= 1")
    paths = {(1, 1): [((1, 1),)]}
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if (i, j) in paths:
                continue
            acc = []
            for di, dj in _STEPS:
                prev = (i - di, j - dj)
                if prev in paths:
                    acc.extend(p + ((i, j),) for p in paths[prev])
            paths[(i, j)] = acc
    return paths[(n, m)]


def enumerate_hipas(shape_s, shape_e):
    """Yield every valid hierarchical warping path between the given shapes.

    Guarded to Hs*He <= 9 and Ws*We <= 9 because the count grows
    exponentially; larger shapes raise ValidationError.
    """
    hs, ws = int(shape_s[0]), int(shape_s[1])
    he, we = int(shape_e[0]), int(shape_e[1])
    if hs * he > 9 or ws * we > 9:
        raise ValidationError(
            f"enumeration limited to Hs*He <= 9 and Ws*We <= 9, got {hs * he} and {ws * we}"
        )
    col_paths = lattice_paths(ws, we)
    for rows in lattice_paths(hs, he):
        for combo in itertools.product(col_paths, repeat=len(rows)):
            yield HiPa(tuple(
                PathNode(h, e, cols) for (h, e), cols in zip(rows, combo)
            ))
