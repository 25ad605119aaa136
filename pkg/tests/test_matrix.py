import numpy as np
import pytest
from hypothesis import given, strategies as st

from warpmatch import (
    Dataset,
    FeatureMatrix,
    FormatError,
    ValidationError,
    element_distance,
    load_dataset,
    load_matrix,
    load_matrix_csv,
    save_dataset,
    save_matrix,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=1, max_size=6)


class TestElementDistance:
    def test_identical_scalar_is_zero(self):
        assert element_distance([3.0], [3.0]) == 0.0

    def test_3_4_5_triangle(self):
        assert element_distance([0.0, 3.0], [4.0, 0.0]) == 5.0

    def test_hand_computed_norm(self):
        # sqrt(1 + 4 + 4) = 3
        assert element_distance([1.0, 2.0, 2.0], [0.0, 0.0, 0.0]) == 3.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            element_distance([1.0, 2.0], [1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            element_distance([np.nan], [0.0])

    @given(vectors, vectors)
    def test_nonnegative_and_symmetric(self, a, b):
        if len(a) != len(b):
            a = (a * len(b))[: len(b)]
        d_ab = element_distance(a, b)
        assert d_ab >= 0.0
        assert d_ab == element_distance(b, a)

    @given(vectors)
    def test_identity_of_indiscernibles(self, a):
        assert element_distance(a, a) == 0.0

    @given(st.integers(1, 5), st.data())
    def test_triangle_inequality(self, dim, data):
        vec = st.lists(finite, min_size=dim, max_size=dim)
        a, b, c = data.draw(vec), data.draw(vec), data.draw(vec)
        assert element_distance(a, c) <= (
            element_distance(a, b) + element_distance(b, c) + 1e-9
        )


class TestFeatureMatrix:
    def test_2d_input_becomes_scalar_channel(self):
        m = FeatureMatrix(np.zeros((2, 3)))
        assert m.shape == (2, 3, 1)

    def test_rejects_empty_dims(self):
        with pytest.raises(ValidationError):
            FeatureMatrix(np.zeros((0, 3, 1)))

    def test_rejects_non_finite(self):
        bad = np.zeros((2, 2, 1))
        bad[1, 1, 0] = np.inf
        with pytest.raises(ValidationError):
            FeatureMatrix(bad)

    def test_immutable(self):
        m = FeatureMatrix(np.ones((2, 2, 2)))
        with pytest.raises(ValueError):
            m.data[0, 0, 0] = 5.0


class TestFmxRoundTrip:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        for trial in range(5):
            arr = rng.uniform(-1e9, 1e9, size=rng.integers(1, 5, size=3))
            m = FeatureMatrix(arr)
            p = tmp_path / f"m{trial}.fmx"
            save_matrix(m, p)
            back = load_matrix(p)
            assert back.data.shape == m.data.shape
            assert back.data.tobytes() == m.data.tobytes()

    def test_zero_height_header_rejected(self, tmp_path):
        p = tmp_path / "bad.fmx"
        p.write_bytes(b"FMX1" + (0).to_bytes(4, "little") * 3)
        with pytest.raises(FormatError, match="byte offset 4"):
            load_matrix(p)

    def test_truncated_payload_rejected(self, tmp_path):
        p = tmp_path / "short.fmx"
        save_matrix(np.ones((2, 2, 2)), p)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(FormatError, match="truncated"):
            load_matrix(p)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.fmx"
        save_matrix(np.ones((1, 1, 1)), p)
        p.write_bytes(b"NOPE" + p.read_bytes()[4:])
        with pytest.raises(FormatError, match="byte offset 0"):
            load_matrix(p)

    def test_non_finite_payload_names_offset(self, tmp_path):
        p = tmp_path / "nan.fmx"
        save_matrix(np.ones((1, 2, 1)), p)
        raw = bytearray(p.read_bytes())
        raw[24:32] = np.float64(np.nan).tobytes()
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="byte offset 24"):
            load_matrix(p)

    def test_trailing_data_rejected(self, tmp_path):
        p = tmp_path / "long.fmx"
        save_matrix(np.ones((1, 1, 1)), p)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(FormatError, match="trailing"):
            load_matrix(p)


class TestCsvLoader:
    def test_loads_scalar_matrix(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("# comment\n1,2,3\n4,5,6\n")
        m = load_matrix_csv(p)
        assert m.shape == (2, 3, 1)
        assert m.data[1, 2, 0] == 6.0

    def test_ragged_rows_rejected(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(FormatError):
            load_matrix_csv(p)


def _write_entries(tmp_path, entries, manifest="seen.manifest"):
    lines = ["# test manifest"]
    for cid, arr in entries:
        rel = f"f{cid}.fmx"
        save_matrix(arr, tmp_path / rel)
        lines.append(f"{cid},{rel}")
    p = tmp_path / manifest
    p.write_text("\n".join(lines) + "\n")
    return p


class TestDataset:
    def test_manifest_order_preserved(self, tmp_path):
        p = _write_entries(tmp_path, [(7, np.ones((2, 2))), (3, np.zeros((2, 2))),
                                      (5, np.full((2, 2), 2.0))])
        ds = load_dataset(p)
        assert ds.class_ids == (7, 3, 5)
        assert ds.name == "seen"

    def test_duplicate_class_id_rejected(self, tmp_path):
        save_matrix(np.ones((1, 1)), tmp_path / "a.fmx")
        save_matrix(np.ones((1, 1)), tmp_path / "b.fmx")
        p = tmp_path / "dup.manifest"
        p.write_text("7,a.fmx\n7,b.fmx\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_dataset(p)

    def test_channel_mismatch_rejected(self, tmp_path):
        save_matrix(np.ones((1, 1, 2)), tmp_path / "a.fmx")
        save_matrix(np.ones((1, 1, 3)), tmp_path / "b.fmx")
        p = tmp_path / "chan.manifest"
        p.write_text("1,a.fmx\n2,b.fmx\n")
        with pytest.raises(ValidationError, match="channel"):
            load_dataset(p)

    def test_malformed_line_names_lineno(self, tmp_path):
        p = tmp_path / "bad.manifest"
        p.write_text("not-a-line\n")
        with pytest.raises(FormatError, match=":1"):
            load_dataset(p)

    def test_save_dataset_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        ds = Dataset("toy", tuple(
            (i, FeatureMatrix(rng.uniform(0, 1, (3, 4, 2)))) for i in range(3)))
        manifest = save_dataset(ds, tmp_path / "out")
        back = load_dataset(manifest)
        assert back.class_ids == ds.class_ids
        for (_, a), (_, b) in zip(ds.entries, back.entries):
            assert a.data.tobytes() == b.data.tobytes()
