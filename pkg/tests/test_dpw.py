import numpy as np
import pytest

from warpmatch import (
    ValidationError,
    dpw,
    dtw,
    enumerate_hipas,
    optimal_hipa,
    path_cost,
    validate_hipa,
)
from warpmatch.dpw import HiPa, PathNode, lattice_paths


from oracles import brute_dpw_min, enum_paths_rec


def count_paths_rec(n, m, _memo={}):
    if (n, m) in _memo:
        return _memo[(n, m)]
    if n == 1 and m == 1:
        return 1
    total = 0
    for di, dj in ((1, 1), (1, 0), (0, 1)):
        if n - di >= 1 and m - dj >= 1:
            total += count_paths_rec(n - di, m - dj)
    _memo[(n, m)] = total
    return total


def random_case(rng, max_dim=3):
    hs, ws, he, we = (int(rng.integers(1, max_dim + 1)) for _ in range(4))
    a = np.round(rng.uniform(0, 10, (hs, ws)), 3)
    b = np.round(rng.uniform(0, 10, (he, we)), 3)
    return a, b


# ---------------------------------------------------------------------------

class TestDpwDistance:
    def test_self_distance_zero(self):
        rng = np.random.default_rng(0)
        for shape in ((1, 1, 1), (3, 4, 2), (5, 2, 3)):
            m = rng.uniform(0, 1, shape)
            assert dpw(m, m)[0] == 0.0

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            dpw(np.ones((2, 2, 2)), np.ones((2, 2, 3)))

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValidationError):
            dpw(np.ones((0, 2)), np.ones((2, 2)))

    def test_oracle_equivalence_small_scalar(self):
        rng = np.random.default_rng(42)
        for _ in range(80):
            a, b = random_case(rng)
            d, tables = dpw(a, b)
            oracle = brute_dpw_min(a, b)
            assert abs(d - oracle) <= 1e-9
            hipa = optimal_hipa(a, b, tables)
            assert abs(path_cost(a, b, hipa) - oracle) <= 1e-9

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            a = rng.uniform(0, 5, (rng.integers(1, 5), rng.integers(1, 5), 2))
            b = rng.uniform(0, 5, (rng.integers(1, 5), rng.integers(1, 5), 2))
            d_ab = dpw(a, b)[0]
            assert d_ab >= 0.0
            assert abs(d_ab - dpw(b, a)[0]) <= 1e-9

    def test_toy_pair_golden_values(self):
        from warpmatch import toy_pair

        s, e = toy_pair()
        d, tables = dpw(s, e)
        assert d == 654.0
        assert float(np.abs(s.data - e.data).sum()) == 1118.0
        hipa = optimal_hipa(s, e, tables)
        assert path_cost(s, e, hipa) == 654.0

    def test_reduces_to_dtw_for_single_row(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            w1, w2, c = rng.integers(1, 6), rng.integers(1, 6), rng.integers(1, 4)
            a = rng.uniform(0, 5, (1, w1, c))
            b = rng.uniform(0, 5, (1, w2, c))
            assert abs(dpw(a, b)[0] - dtw(a[0], b[0])[0]) <= 1e-12

    def test_reduces_to_dtw_for_single_column(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            h1, h2, c = rng.integers(1, 6), rng.integers(1, 6), rng.integers(1, 4)
            a = rng.uniform(0, 5, (h1, 1, c))
            b = rng.uniform(0, 5, (h2, 1, c))
            cols_a = a[:, 0, :]
            cols_b = b[:, 0, :]
            assert abs(dpw(a, b)[0] - dtw(cols_a, cols_b)[0]) <= 1e-12

    def test_recompute_mode_matches_stored_mode(self):
        rng = np.random.default_rng(10)
        a = rng.uniform(0, 5, (4, 5, 2))
        b = rng.uniform(0, 5, (3, 6, 2))
        d1, t1 = dpw(a, b, keep_row_tables=True)
        d2, t2 = dpw(a, b, keep_row_tables=False)
        assert d1 == d2
        assert t2.row_tables is None
        h1 = optimal_hipa(a, b, t1)
        h2 = optimal_hipa(a, b, t2)
        assert h1 == h2

    def test_row_tables_match_individual_dtw(self):
        rng = np.random.default_rng(11)
        a = rng.uniform(0, 5, (3, 4, 2))
        b = rng.uniform(0, 5, (2, 5, 2))
        _, tables = dpw(a, b)
        for h in range(3):
            for e in range(2):
                _, table = dtw(a[h], b[e])
                assert np.array_equal(tables.row_table(h, e), table)


class TestOptimalHipa:
    def test_1x1_forced(self):
        hipa = optimal_hipa(np.ones((1, 1)), np.zeros((1, 1)))
        assert len(hipa) == 1
        assert (hipa.nodes[0].hs, hipa.nodes[0].he) == (1, 1)
        assert hipa.nodes[0].cols == ((1, 1),)

    def test_identical_matrices_pure_diagonal(self):
        rng = np.random.default_rng(12)
        m = rng.uniform(0, 9, (3, 3))
        hipa = optimal_hipa(m, m)
        assert [(n.hs, n.he) for n in hipa.nodes] == [(1, 1), (2, 2), (3, 3)]
        for node in hipa.nodes:
            assert node.cols == ((1, 1), (2, 2), (3, 3))

    def test_every_result_is_valid(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            hs, ws = rng.integers(1, 7, size=2)
            he, we = rng.integers(1, 7, size=2)
            c = int(rng.integers(1, 4))
            a = rng.uniform(0, 5, (hs, ws, c))
            b = rng.uniform(0, 5, (he, we, c))
            hipa = optimal_hipa(a, b)
            assert validate_hipa(hipa, (hs, ws), (he, we)) == []

    def test_cost_never_below_distance_on_sampled_paths(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            a, b = random_case(rng, max_dim=2)
            d, _ = dpw(a, b)
            for hipa in enumerate_hipas(a.shape[:2], b.shape[:2]):
                assert path_cost(a, b, hipa) >= d - 1e-9


class TestValidateHipa:
    def test_diagonal_is_ok(self):
        hipa = optimal_hipa(np.ones((2, 2)), np.ones((2, 2)))
        assert validate_hipa(hipa, (2, 2), (2, 2)) == []

    def test_missing_terminal_row_node(self):
        bad = HiPa((PathNode(1, 1, ((1, 1), (2, 2))),))
        issues = validate_hipa(bad, (2, 2), (2, 2))
        assert any("boundary" in v and "last row node" in v for v in issues)

    def test_oversize_first_level_step(self):
        bad = HiPa((
            PathNode(1, 1, ((1, 1), (2, 2))),
            PathNode(3, 1, ((1, 1), (2, 2))),
        ))
        issues = validate_hipa(bad, (3, 2), (2, 2))
        assert any("step size" in v for v in issues)

    def test_backwards_second_level(self):
        bad = HiPa((
            PathNode(1, 1, ((1, 1), (2, 2), (1, 2), (2, 2))),
        ))
        issues = validate_hipa(bad, (1, 2), (1, 2))
        assert any("monotonicity" in v for v in issues)

    def test_path_cost_raises_on_invalid(self):
        bad = HiPa((PathNode(1, 1, ((1, 1),)),))
        with pytest.raises(ValidationError):
            path_cost(np.ones((2, 2)), np.ones((2, 2)), bad)


class TestEnumeration:
    def test_1x1_single_path(self):
        assert sum(1 for _ in enumerate_hipas((1, 1), (1, 1))) == 1

    def test_two_row_scalar_count(self):
        # width-1 rows: 3 monotone row pairings, single column node each
        assert sum(1 for _ in enumerate_hipas((2, 1), (2, 1))) == 3

    def test_2x2_count_against_recursive_counter(self):
        n_rows = count_paths_rec(2, 2)
        per_node = count_paths_rec(2, 2)
        expected = sum(
            per_node ** len(p) for p in enum_paths_rec(2, 2)
        )
        got = sum(1 for _ in enumerate_hipas((2, 2), (2, 2)))
        assert got == expected == 63
        assert n_rows == len(lattice_paths(2, 2)) == 3

    def test_all_yielded_paths_are_valid_and_unique(self):
        seen = set()
        for hipa in enumerate_hipas((2, 2), (2, 2)):
            assert validate_hipa(hipa, (2, 2), (2, 2)) == []
            key = tuple((n.hs, n.he, n.cols) for n in hipa.nodes)
            assert key not in seen
            seen.add(key)

    def test_guard_rejects_large_shapes(self):
        with pytest.raises(ValidationError):
            next(enumerate_hipas((4, 3), (3, 3)))

    def test_full_stream_min_matches_factorized_oracle(self):
        rng = np.random.default_rng(15)
        for shapes in (((2, 2), (2, 2)), ((3, 2), (3, 2)), ((2, 3), (3, 2))):
            (hs, ws), (he, we) = shapes
            a = np.round(rng.uniform(0, 10, (hs, ws)), 3)
            b = np.round(rng.uniform(0, 10, (he, we)), 3)
            stream_min = min(
                path_cost(a, b, hipa) for hipa in enumerate_hipas((hs, ws), (he, we)))
            assert abs(stream_min - brute_dpw_min(a, b)) <= 1e-9
            assert abs(stream_min - dpw(a, b)[0]) <= 1e-9
