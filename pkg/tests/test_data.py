import numpy as np
import pytest

from pacedistill.data import (
    Dataset,
    SplitSpec,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    standardize,
    take,
)


class TestGenerateSynthetic:
    def test_noise_free_labels_are_clean(self):
        ds = generate_synthetic(200, 5, 2, 2.0, 0.0, seed=1)
        np.testing.assert_array_equal(ds.labels, ds.clean_labels)

    def test_exactly_floor_fraction_flipped(self):
        ds = generate_synthetic(1000, 5, 2, 2.0, 0.2, seed=2)
        flipped = ds.labels != ds.clean_labels
        assert flipped.sum() == 200
        # every flip lands on a different class
        assert np.all(ds.labels[flipped] != ds.clean_labels[flipped])

    def test_same_seed_bitwise_identical(self):
        a = generate_synthetic(300, 8, 3, 1.5, 0.1, seed=7)
        b = generate_synthetic(300, 8, 3, 1.5, 0.1, seed=7)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.clean_labels, b.clean_labels)

    def test_different_seed_differs(self):
        a = generate_synthetic(300, 8, 2, 1.5, 0.1, seed=7)
        b = generate_synthetic(300, 8, 2, 1.5, 0.1, seed=8)
        assert not np.array_equal(a.features, b.features)

    def test_classes_are_balanced_and_separated(self):
        ds = generate_synthetic(1000, 4, 2, 3.0, 0.0, seed=3)
        counts = np.bincount(ds.labels)
        assert abs(counts[0] - counts[1]) <= 1
        gap = (
            ds.features[ds.labels == 1, 0].mean()
            - ds.features[ds.labels == 0, 0].mean()
        )
        assert gap == pytest.approx(3.0, abs=0.3)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            generate_synthetic(1, 5, 2, 2.0, 0.0, seed=0)  # n < class_count
        with pytest.raises(ValueError):
            generate_synthetic(100, 5, 2, 2.0, 1.0, seed=0)  # noise_rate = 1
        with pytest.raises(ValueError):
            generate_synthetic(100, 5, 2, -1.0, 0.1, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(100, 0, 2, 2.0, 0.1, seed=0)


class TestSplit:
    def test_exact_sizes_on_balanced_hundred(self):
        ds = generate_synthetic(100, 3, 2, 2.0, 0.0, seed=5)
        tr, va, te = split(ds, SplitSpec(0.7, 0.15, 0.15, seed=0))
        assert (tr.n, va.n, te.n) == (70, 15, 15)

    def test_partition_is_exact(self):
        ds = generate_synthetic(237, 3, 3, 2.0, 0.1, seed=6)
        spec = SplitSpec(0.6, 0.2, 0.2, seed=1)
        parts = split(ds, spec)
        assert sum(p.n for p in parts) == ds.n
        # no overlap: every feature row is used exactly once
        stacked = np.vstack([p.features for p in parts])
        assert {tuple(row) for row in stacked} == {tuple(row) for row in ds.features}

    def test_stratification_within_one_per_class(self):
        ds = generate_synthetic(237, 3, 3, 2.0, 0.0, seed=6)
        spec = SplitSpec(0.6, 0.2, 0.2, seed=1)
        fracs = (0.6, 0.2, 0.2)
        parts = split(ds, spec)
        for c in range(3):
            total = int((ds.labels == c).sum())
            for frac, part in zip(fracs, parts):
                got = int((part.labels == c).sum())
                assert abs(got - frac * total) <= 1

    def test_two_class_balance_preserved(self):
        ds = generate_synthetic(400, 3, 2, 2.0, 0.0, seed=8)
        for part in split(ds, SplitSpec(0.7, 0.15, 0.15, seed=3)):
            counts = np.bincount(part.labels, minlength=2)
            assert abs(int(counts[0]) - int(counts[1])) <= 2

    def test_same_seed_identical_different_seed_not(self):
        ds = generate_synthetic(200, 3, 2, 2.0, 0.1, seed=9)
        a = split(ds, SplitSpec(0.7, 0.15, 0.15, seed=4))
        b = split(ds, SplitSpec(0.7, 0.15, 0.15, seed=4))
        c = split(ds, SplitSpec(0.7, 0.15, 0.15, seed=5))
        np.testing.assert_array_equal(a[0].features, b[0].features)
        assert not np.array_equal(a[0].features, c[0].features)

    def test_clean_labels_travel_with_the_split(self):
        ds = generate_synthetic(200, 3, 2, 2.0, 0.3, seed=10)
        tr, _, _ = split(ds, SplitSpec(0.7, 0.15, 0.15, seed=0))
        assert tr.clean_labels is not None and tr.clean_labels.shape == tr.labels.shape

    def test_small_class_rejected(self):
        ds = Dataset(np.random.default_rng(0).standard_normal((10, 2)),
                     np.array([0] * 8 + [1] * 2), 2)
        with pytest.raises(ValueError):
            split(ds, SplitSpec(0.7, 0.15, 0.15, seed=0))

    def test_bad_fractions_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(0.7, 0.2, 0.2, seed=0)
        with pytest.raises(ValueError):
            SplitSpec(0.7, 0.3, 0.0, seed=0)


class TestStandardize:
    def test_train_statistics_applied_everywhere(self):
        rng = np.random.default_rng(11)
        tr = Dataset(rng.standard_normal((50, 3)) * 4 + 2, rng.integers(0, 2, 50), 2)
        va = Dataset(rng.standard_normal((20, 3)) * 4 + 2, rng.integers(0, 2, 20), 2)
        tr2, va2 = standardize(tr, va)
        np.testing.assert_allclose(tr2.features.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(tr2.features.var(axis=0), 1.0, atol=1e-9)
        mean, std = tr.features.mean(axis=0), tr.features.std(axis=0)
        np.testing.assert_allclose(va2.features, (va.features - mean) / std, atol=1e-9)

    def test_constant_column_maps_to_zero(self):
        feats = np.random.default_rng(12).standard_normal((30, 2))
        feats[:, 1] = 4.25
        ds = Dataset(feats, np.random.default_rng(0).integers(0, 2, 30), 2)
        (out,) = standardize(ds)
        np.testing.assert_array_equal(out.features[:, 1], 0.0)
        assert np.all(np.isfinite(out.features))


class TestLoadCsv:
    def test_hand_written_fixture(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("a,b,label\n1.0,2.0,0\n3.0,4.0,1\n-1.5,0.25,0\n")
        ds = load_csv(path, "label")
        np.testing.assert_array_equal(
            ds.features, [[1.0, 2.0], [3.0, 4.0], [-1.5, 0.25]]
        )
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])
        assert ds.class_count == 2

    def test_label_by_name_and_index_agree(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("a,label,b\n1.0,1,2.0\n3.0,0,4.0\n5.0,1,6.0\n")
        by_name = load_csv(path, "label")
        by_index = load_csv(path, 1)
        np.testing.assert_array_equal(by_name.features, by_index.features)
        np.testing.assert_array_equal(by_name.labels, by_index.labels)

    def test_string_labels_map_lexicographically(self, tmp_path):
        path = tmp_path / "str.csv"
        path.write_text("x,label\n1.0,sick\n2.0,healthy\n3.0,sick\n")
        ds = load_csv(path, "label")
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])  # healthy=0 < sick=1

    def test_parse_error_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,label\n1.0,2.0,0\n3.0,oops,1\n")
        with pytest.raises(ValueError, match=r"row 3.*'b'"):
            load_csv(path, "label")

    def test_non_finite_cell_rejected(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("a,label\nnan,0\n2.0,1\n")
        with pytest.raises(ValueError, match="row 2"):
            load_csv(path, "label")

    def test_unseen_label_with_class_count(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a,label\n1.0,0\n2.0,3\n")
        with pytest.raises(ValueError, match="unseen label"):
            load_csv(path, "label", class_count=2)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "cols.csv"
        path.write_text("a,b\n1.0,2.0\n")
        with pytest.raises(ValueError, match="no column named"):
            load_csv(path, "label")

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b,label\n1.0,2.0,0\n1.0,1\n")
        with pytest.raises(ValueError, match="row 3"):
            load_csv(path, "label")

    def test_round_trip_through_save_csv(self, tmp_path):
        ds = generate_synthetic(50, 4, 2, 2.0, 0.2, seed=13)
        path = tmp_path / "synth.csv"
        save_csv(path, ds)
        loaded = load_csv(path, "label", drop_columns=("clean_label",))
        np.testing.assert_array_equal(loaded.features, ds.features)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        clean = load_csv(path, "clean_label", drop_columns=("label",))
        np.testing.assert_array_equal(clean.labels, ds.clean_labels)


class TestDatasetInvariants:
    def test_rejects_empty_and_misaligned(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 3)), np.zeros(0, dtype=int), 2)
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(4, dtype=int), 2)

    def test_rejects_bad_labels_and_nonfinite(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.array([0, 1, 2]), 2)
        feats = np.zeros((3, 2))
        feats[0, 0] = np.inf
        with pytest.raises(ValueError):
            Dataset(feats, np.array([0, 1, 0]), 2)

    def test_take_subsets_consistently(self):
        ds = generate_synthetic(30, 3, 2, 2.0, 0.2, seed=14)
        sub = take(ds, [4, 7, 9])
        np.testing.assert_array_equal(sub.features, ds.features[[4, 7, 9]])
        np.testing.assert_array_equal(sub.clean_labels, ds.clean_labels[[4, 7, 9]])
