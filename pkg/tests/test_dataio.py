"""
Test feature/label I/O, class splits, subsampling, augmentation and synthetic data.
"""
import numpy as np
import pytest
from structlog.testing import capture_logs

from zeroshot.dataio.augment import build_augmented, rows_to_targets
from zeroshot.dataio.base import Dataset, SyntheticSpec, ZeroShotSplit
from zeroshot.dataio.loaders import (
    FEATURE_HEADER,
    encode_labels,
    load_dataset,
    read_feature_file,
    read_labels,
    write_dataset,
    write_feature_csv,
    write_feature_file,
)
from zeroshot.dataio.splits import (
    class_test_counts,
    first_classes_fraction,
    fraction_map_from_names,
    generate_splits,
    subsample_test,
)
from zeroshot.dataio.synthetic import generate_synthetic, synthetic_class_name
from zeroshot.error_handler import DataError, FormatError, ParameterError

from tests.helpers import labelled_dataset, make_builder


class TestFeatureFiles:
    """Binary and CSV feature formats."""

    def test_binary_round_trip_is_exact_in_float32(self, tmp_path, rng):
        X = rng.standard_normal((7, 4)).astype(np.float32)
        path = tmp_path / "f.zslf"
        write_feature_file(path, X)
        np.testing.assert_array_equal(read_feature_file(path), X)
        assert path.stat().st_size == FEATURE_HEADER.itemsize + 7 * 4 * 4

    def test_csv_round_trip(self, tmp_path, rng):
        X = rng.standard_normal((5, 3)).astype(np.float32)
        path = tmp_path / "f.csv"
        write_feature_csv(path, X)
        np.testing.assert_array_equal(read_feature_file(path), X)

    def test_truncated_binary_rejected(self, tmp_path):
        path = tmp_path / "f.zslf"
        write_feature_file(path, np.ones((3, 2)))
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(FormatError):
            read_feature_file(path)

    def test_unsupported_version_rejected(self, tmp_path):
        path = tmp_path / "f.zslf"
        write_feature_file(path, np.ones((1, 1)))
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            read_feature_file(path)

    def test_csv_header_must_match(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("idx,a,b\n0,1,2\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_feature_file(path)


class TestLabelsAndDatasets:
    """Label files and dataset assembly."""

    def test_trailing_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("cat\ndog\n\n\n", encoding="utf-8")
        assert read_labels(path) == ["cat", "dog"]

    def test_blank_line_inside_rejected(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("cat\n\ndog\n", encoding="utf-8")
        with pytest.raises(FormatError):
            read_labels(path)

    def test_classes_numbered_by_first_occurrence(self):
        y, names = encode_labels(["dog", "cat", "dog", "emu"])
        assert names == ("dog", "cat", "emu")
        assert y.tolist() == [0, 1, 0, 2]

    def test_load_normalizes_rows(self, tmp_path):
        write_feature_file(tmp_path / "f.zslf", np.array([[3.0, 4.0], [0.0, 2.0]]))
        (tmp_path / "l.txt").write_text("a\nb\n", encoding="utf-8")
        dataset = load_dataset(tmp_path / "f.zslf", tmp_path / "l.txt")
        np.testing.assert_allclose(dataset.X, [[0.6, 0.8], [0.0, 1.0]], atol=1e-7)
        raw = load_dataset(tmp_path / "f.zslf", tmp_path / "l.txt", normalize=False)
        np.testing.assert_array_equal(raw.X, [[3.0, 4.0], [0.0, 2.0]])

    def test_label_count_mismatch(self, tmp_path):
        write_feature_file(tmp_path / "f.zslf", np.ones((3, 2)))
        (tmp_path / "l.txt").write_text("a\nb\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_dataset(tmp_path / "f.zslf", tmp_path / "l.txt")

    def test_dataset_rejects_non_finite(self):
        with pytest.raises(DataError):
            Dataset(name="bad", X=np.array([[np.nan]]), y=np.array([0]), class_names=("a",))

    def test_written_dataset_loads_back(self, tmp_path, planted):
        write_dataset(planted.dataset, tmp_path / "f.zslf", tmp_path / "l.txt")
        loaded = load_dataset(tmp_path / "f.zslf", tmp_path / "l.txt", normalize=False)
        assert loaded.class_names == planted.dataset.class_names
        np.testing.assert_array_equal(loaded.y, planted.dataset.y)
        np.testing.assert_allclose(loaded.X, planted.dataset.X, atol=1e-6)


class TestSplits:
    """Random 50/50 class splits."""

    def test_deterministic_and_disjoint(self):
        first = generate_splits(11, 6, seed=3)
        second = generate_splits(11, 6, seed=3)
        assert first == second
        for split in first:
            assert len(split.test_classes) == 5
            assert len(split.train_classes) == 6
            assert not set(split.test_classes) & set(split.train_classes)
            assert sorted(split.train_classes + split.test_classes) == list(range(11))

    def test_different_seeds_differ(self):
        assert generate_splits(20, 5, seed=0) != generate_splits(20, 5, seed=1)

    def test_every_class_tested_with_enough_splits(self):
        splits = generate_splits(10, 20, seed=0)
        assert class_test_counts(splits, 10).min() >= 1
        assert [s.split_id for s in splits] == list(range(20))

    def test_too_few_classes(self):
        with pytest.raises(ParameterError):
            generate_splits(1, 3, seed=0)

    def test_overlapping_split_rejected(self):
        with pytest.raises(ParameterError):
            ZeroShotSplit(split_id=0, train_classes=(0, 1), test_classes=(1, 2), seed=0)


class TestSubsampling:
    """Imbalanced test sets."""

    def test_counts_round_half_up(self, rng):
        dataset = labelled_dataset(rng, ["a", "b", "c"], per_class=5, d_x=3)
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1, 2), seed=0)
        rows = subsample_test(dataset, split, {1: 50.0}, seed=9)
        assert np.sum(dataset.y[rows] == 1) == 3
        assert np.sum(dataset.y[rows] == 2) == 5
        assert np.all(np.diff(rows) > 0)

    def test_rounding_to_zero_keeps_one(self, rng):
        dataset = labelled_dataset(rng, ["a", "b"], per_class=30, d_x=3)
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1,), seed=0)
        with capture_logs() as logs:
            rows = subsample_test(dataset, split, {1: 1.0}, seed=0)
        assert rows.size == 1
        assert any(e["event"] == "subsample_rounded_to_zero" for e in logs)

    def test_same_seed_same_subsample(self, rng):
        dataset = labelled_dataset(rng, ["a", "b"], per_class=30, d_x=3)
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1,), seed=0)
        first = subsample_test(dataset, split, {1: 40.0}, seed=5)
        np.testing.assert_array_equal(first, subsample_test(dataset, split, {1: 40.0}, seed=5))

    def test_non_test_class_rejected(self, rng):
        dataset = labelled_dataset(rng, ["a", "b"], per_class=3, d_x=3)
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1,), seed=0)
        with pytest.raises(ParameterError):
            subsample_test(dataset, split, {0: 50.0}, seed=0)

    def test_fraction_maps(self, rng):
        dataset = labelled_dataset(rng, ["a", "b", "c", "d"], per_class=2, d_x=3)
        split = ZeroShotSplit(split_id=0, train_classes=(0, 2), test_classes=(1, 3), seed=0)
        assert first_classes_fraction(split, 1, 10.0) == {1: 10.0}
        assert fraction_map_from_names(dataset, split, {"b": 20.0, "c": 30.0}) == {1: 20.0}
        with pytest.raises(ParameterError):
            fraction_map_from_names(dataset, split, {"zebra": 20.0})


class TestAugmentation:
    """Pooling auxiliary datasets into the training set."""

    VECTORS = {
        "brush hair": [1.0, 0.0, 0.0],
        "ride horse": [0.0, 1.0, 0.0],
        "ride bike": [0.0, 1.0, 1.0],
        "swim": [0.0, 0.0, 1.0],
    }

    def test_exact_name_matches_with_test_classes_dropped(self, rng):
        target = labelled_dataset(rng, ["brush_hair", "RideHorse"], per_class=4, d_x=5)
        aux = labelled_dataset(rng, ["Ride Horse", "ride bike", "swim"], per_class=3, d_x=5, name="aux")
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1,), seed=0)
        train_set = build_augmented(target, split, [aux], make_builder(self.VECTORS))
        assert train_set.n_target == 4
        assert train_set.n_aux == 6
        assert "Ride Horse" not in train_set.row_classes
        assert set(train_set.row_classes) == {"brush_hair", "ride bike", "swim"}
        assert train_set.provenance[:4] == ("toy",) * 4
        assert train_set.X_tr.shape == (10, 5)
        assert train_set.Z_tr.shape == (3, 10)
        np.testing.assert_array_equal(train_set.Z_tr[:, 0], [1.0, 0.0, 0.0])

    def test_feature_dimension_must_agree(self, rng):
        target = labelled_dataset(rng, ["brush hair", "swim"], per_class=2, d_x=5)
        aux = labelled_dataset(rng, ["ride bike"], per_class=2, d_x=4, name="aux")
        split = ZeroShotSplit(split_id=0, train_classes=(0,), test_classes=(1,), seed=0)
        with pytest.raises(DataError):
            build_augmented(target, split, [aux], make_builder(self.VECTORS))

    def test_rows_to_targets(self):
        Z = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(rows_to_targets(Z, np.array([7, 5, 7]), [5, 7]),
                                      [[2.0, 1.0, 2.0], [4.0, 3.0, 4.0]])


class TestSyntheticGenerator:
    """Planted-map data."""

    def test_noiseless_features_lie_on_planted_map(self, planted):
        X, y = planted.dataset.X, planted.dataset.y
        assert X.shape == (300, 20)
        expected = (planted.mapping @ planted.class_matrix[:, y]).T
        np.testing.assert_allclose(X, expected, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(planted.mapping.T @ planted.mapping, np.eye(5), atol=1e-12)

    def test_planted_split_and_names(self, planted):
        assert planted.split.train_classes == tuple(range(6))
        assert planted.split.test_classes == tuple(range(6, 10))
        assert planted.dataset.class_names[3] == synthetic_class_name(3) == "cls003"

    def test_builder_resolves_prototypes(self, planted):
        Z = planted.builder()(["cls002", "cls000"])
        np.testing.assert_array_equal(Z, planted.class_matrix[:, [2, 0]])

    def test_shift_moves_only_test_classes(self):
        data = generate_synthetic(SyntheticSpec(shift_sigma=0.5, seed=2))
        norms = np.linalg.norm(data.offsets, axis=1)
        np.testing.assert_array_equal(norms[:6], 0.0)
        np.testing.assert_allclose(norms[6:], 0.5, atol=1e-12)

    def test_shared_shift_lies_in_the_planted_span(self):
        data = generate_synthetic(SyntheticSpec(shift_sigma=1.5, shift_mode="shared", seed=3))
        test_offsets = data.offsets[6:]
        np.testing.assert_array_equal(test_offsets, np.repeat(test_offsets[:1], 4, axis=0))
        np.testing.assert_allclose(np.linalg.norm(data.mapping.T @ test_offsets[0]), 1.5, atol=1e-12)
        np.testing.assert_array_equal(data.offsets[:6], 0.0)

    def test_cue_channel_tracks_training_semantics_only(self):
        spec = SyntheticSpec(cue_sigma=0.3, seed=5)
        data = generate_synthetic(spec)
        C, B = data.cue_map, data.mapping
        np.testing.assert_allclose(B.T @ C, 0.0, atol=1e-12)
        X, y = data.dataset.X, data.dataset.y
        train = y < 6
        np.testing.assert_allclose((X[train] @ C).T, data.class_matrix[:, y[train]], atol=1e-12)
        np.testing.assert_allclose((X[~train] @ B).T, data.class_matrix[:, y[~train]], atol=1e-12)
        cue_test = X[~train] @ C
        assert cue_test.std() == pytest.approx(0.3, rel=0.2)

    def test_shifted_reference_rows_are_unit(self):
        spec = SyntheticSpec.shifted_reference(seed=1)
        assert spec.shift_mode == "shared"
        X = generate_synthetic(spec).dataset.X
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)
        assert SyntheticSpec.shifted_reference(shift_sigma=2.0).shift_sigma == 2.0

    def test_seeds_change_data(self):
        a = generate_synthetic(SyntheticSpec(seed=0)).dataset.X
        b = generate_synthetic(SyntheticSpec(seed=1)).dataset.X
        assert a.shape == b.shape
        assert not np.allclose(a, b)

    def test_clustered_prototypes_concentrate_on_their_block(self):
        spec = SyntheticSpec(d_z=6, n_clusters=2, cluster_leak=0.0, test_cluster=1, seed=4)
        data = generate_synthetic(spec)
        assert data.clusters == (0, 1, 0, 1, 0, 1, 1, 1, 1, 1)
        Z = data.class_matrix
        np.testing.assert_array_equal(Z[3:, 0], 0.0)
        np.testing.assert_array_equal(Z[:3, 7], 0.0)

    def test_invalid_spec(self):
        with pytest.raises(ParameterError):
            SyntheticSpec(d_x=3, d_z=5)
        with pytest.raises(ParameterError):
            SyntheticSpec(n_clusters=2, test_cluster=2)
        with pytest.raises(ParameterError):
            SyntheticSpec(shift_mode="radial")
        with pytest.raises(ParameterError):
            SyntheticSpec(d_x=8, d_z=5, cue_sigma=0.1)
