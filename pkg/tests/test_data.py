import json

import numpy as np
import pytest

from rwfn.data import (
    BoxRecord,
    ClassInfo,
    Dataset,
    DatasetError,
    PartOfPair,
    SyntheticConfig,
    dataset_from_json,
    dataset_to_json,
    gen_synthetic,
    inclusion_ratio,
    load_dataset,
    pair_features,
    save_dataset,
    split,
)
from rwfn.numerics import make_rng


def tiny_dataset():
    classes = [ClassInfo("whole0", "whole", ("part0",)), ClassInfo("part0", "part")]
    records = [
        BoxRecord("w", np.array([1.0, 0.0, 0.1, 0.1, 0.9, 0.9]), (0.1, 0.1, 0.9, 0.9), frozenset(["whole0"])),
        BoxRecord("p", np.array([0.0, 1.0, 0.2, 0.2, 0.4, 0.4]), (0.2, 0.2, 0.4, 0.4), frozenset(["part0"])),
    ]
    pairs = [PartOfPair("p", "w", True)]
    return Dataset(n=6, classes=classes, records=records, pairs=pairs)


class TestValidation:
    def test_round_trip(self):
        ds = tiny_dataset()
        clone = dataset_from_json(dataset_to_json(ds))
        assert dataset_to_json(clone) == dataset_to_json(ds)

    def test_file_round_trip(self, tmp_path):
        ds = gen_synthetic(SyntheticConfig(num_scenes=3, seed=1))
        path = tmp_path / "ds.json"
        save_dataset(ds, path)
        clone = load_dataset(path)
        assert dataset_to_json(clone) == dataset_to_json(ds)

    def test_dangling_pair(self):
        ds = tiny_dataset()
        with pytest.raises(DatasetError):
            Dataset(n=6, classes=ds.classes, records=ds.records,
                    pairs=[PartOfPair("p", "nope", True)])

    def test_feature_length_mismatch(self):
        ds = tiny_dataset()
        bad = BoxRecord("x", np.zeros(3), (0.1, 0.1, 0.2, 0.2), frozenset(["part0"]))
        with pytest.raises(DatasetError):
            Dataset(n=6, classes=ds.classes, records=ds.records + [bad], pairs=[])

    def test_unknown_label(self):
        ds = tiny_dataset()
        bad = BoxRecord("x", np.zeros(6), (0.1, 0.1, 0.2, 0.2), frozenset(["ghost"]))
        with pytest.raises(DatasetError):
            Dataset(n=6, classes=ds.classes, records=ds.records + [bad], pairs=[])

    def test_degenerate_bbox(self):
        with pytest.raises(DatasetError):
            BoxRecord("x", np.zeros(6), (0.5, 0.1, 0.5, 0.2), frozenset(["part0"]))

    def test_self_pair(self):
        with pytest.raises(DatasetError):
            PartOfPair("a", "a", True)

    def test_duplicate_ids(self):
        ds = tiny_dataset()
        with pytest.raises(DatasetError):
            Dataset(n=6, classes=ds.classes, records=ds.records + ds.records, pairs=[])

    def test_malformed_json(self):
        with pytest.raises(DatasetError):
            dataset_from_json({"n": 4})


class TestInclusionRatio:
    def test_nested(self):
        assert inclusion_ratio((0.2, 0.2, 0.4, 0.4), (0.1, 0.1, 0.9, 0.9)) == pytest.approx(1.0)

    def test_disjoint(self):
        assert inclusion_ratio((0.0, 0.0, 0.2, 0.2), (0.5, 0.5, 0.9, 0.9)) == 0.0

    def test_half_overlap(self):
        # b spans x in [0, 0.2], b' covers x in [0.1, 0.2]: half of b's area
        assert inclusion_ratio((0.0, 0.0, 0.2, 0.2), (0.1, 0.0, 0.2, 0.2)) == pytest.approx(0.5)

    def test_degenerate(self):
        with pytest.raises(DatasetError):
            inclusion_ratio((0.5, 0.1, 0.5, 0.2), (0.0, 0.0, 1.0, 1.0))

    def test_asymmetric(self):
        small, big = (0.2, 0.2, 0.4, 0.4), (0.1, 0.1, 0.9, 0.9)
        assert inclusion_ratio(small, big) == pytest.approx(1.0)
        assert inclusion_ratio(big, small) < 1.0


class TestPairFeatures:
    def test_concat_order(self):
        ds = tiny_dataset()
        part, whole = ds.by_id("p"), ds.by_id("w")
        f = pair_features(ds, part, whole)
        assert f.shape == (12,)
        assert np.array_equal(f[:6], part.features)
        assert np.array_equal(f[6:], whole.features)

    def test_order_matters(self):
        ds = tiny_dataset()
        a, b = ds.by_id("p"), ds.by_id("w")
        assert not np.array_equal(pair_features(ds, a, b), pair_features(ds, b, a))


class TestGenerator:
    def test_determinism(self):
        a = gen_synthetic(SyntheticConfig(num_scenes=10, seed=3))
        b = gen_synthetic(SyntheticConfig(num_scenes=10, seed=3))
        assert dataset_to_json(a) == dataset_to_json(b)

    def test_noiseless_argmax(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=10, feature_noise=0.0, seed=4))
        class_index = {c.name: i for i, c in enumerate(ds.classes)}
        k = len(ds.classes)
        for r in ds.records:
            assert int(np.argmax(r.features[:k])) == class_index[ds.primary_label(r)]

    def test_positive_pairs_contained(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=30, seed=5))
        for p in ds.pairs:
            if p.positive:
                ir = inclusion_ratio(ds.by_id(p.part).bbox, ds.by_id(p.whole).bbox)
                assert ir >= 0.9

    def test_feature_dim(self):
        cfg = SyntheticConfig(num_scenes=3, num_whole_classes=4, parts_per_whole=2, seed=0)
        ds = gen_synthetic(cfg)
        assert ds.n == 4 * 3 + 4  # classes (wholes + parts) plus bbox block

    def test_features_clipped(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=20, feature_noise=0.5, seed=6))
        for r in ds.records:
            assert (r.features >= 0.0).all() and (r.features <= 1.0).all()

    def test_positives_beat_negatives_geometrically(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, seed=7))
        pos = [inclusion_ratio(ds.by_id(p.part).bbox, ds.by_id(p.whole).bbox)
               for p in ds.pairs if p.positive]
        neg = [inclusion_ratio(ds.by_id(p.part).bbox, ds.by_id(p.whole).bbox)
               for p in ds.pairs if not p.positive]
        assert np.mean(pos) > np.mean(neg)

    def test_hard_negatives_present(self):
        # decoy containments: some negatives are geometrically near-contained
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, negative_ratio=2.0, seed=8))
        neg_ir = [inclusion_ratio(ds.by_id(p.part).bbox, ds.by_id(p.whole).bbox)
                  for p in ds.pairs if not p.positive]
        assert max(neg_ir) > 0.8

    def test_negative_ratio(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, negative_ratio=1.0, seed=9))
        n_pos = sum(p.positive for p in ds.pairs)
        n_neg = sum(not p.positive for p in ds.pairs)
        assert n_neg == n_pos

    def test_bad_config(self):
        with pytest.raises(DatasetError):
            SyntheticConfig(num_scenes=0)
        with pytest.raises(DatasetError):
            SyntheticConfig(feature_noise=-0.1)


class TestSplit:
    def test_ten_records_eight_two(self):
        classes = [ClassInfo("c", "whole")]
        records = [
            BoxRecord(f"r{i}", np.zeros(1), (0.1, 0.1, 0.5, 0.5), frozenset(["c"]))
            for i in range(10)
        ]
        ds = Dataset(n=1, classes=classes, records=records, pairs=[])
        sp = split(ds, 0.8, make_rng(0))
        assert len(sp.train.records) == 8 and len(sp.test.records) == 2

    def test_stratification_within_one(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, seed=10))
        sp = split(ds, 0.8, make_rng(1))
        by_class_train: dict = {}
        by_class_total: dict = {}
        for r in ds.records:
            by_class_total[ds.primary_label(r)] = by_class_total.get(ds.primary_label(r), 0) + 1
        for r in sp.train.records:
            by_class_train[sp.train.primary_label(r)] = by_class_train.get(sp.train.primary_label(r), 0) + 1
        for cname, total in by_class_total.items():
            got = by_class_train.get(cname, 0)
            assert abs(got - 0.8 * total) <= 1.0

    def test_records_partitioned(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=20, seed=11))
        sp = split(ds, 0.8, make_rng(2))
        train_ids = {r.id for r in sp.train.records}
        test_ids = {r.id for r in sp.test.records}
        assert train_ids.isdisjoint(test_ids)
        assert train_ids | test_ids == {r.id for r in ds.records}

    def test_no_pair_spans_splits(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, seed=12))
        sp = split(ds, 0.8, make_rng(3))
        train_ids = {r.id for r in sp.train.records}
        for p in sp.train.pairs:
            assert p.part in train_ids and p.whole in train_ids
        assert sp.dropped_pairs == len(ds.pairs) - len(sp.train.pairs) - len(sp.test.pairs)

    def test_determinism(self):
        ds = gen_synthetic(SyntheticConfig(num_scenes=40, seed=13))
        a = split(ds, 0.8, make_rng(4))
        b = split(ds, 0.8, make_rng(4))
        assert {r.id for r in a.train.records} == {r.id for r in b.train.records}

    def test_bad_ratio(self):
        with pytest.raises(DatasetError):
            split(tiny_dataset(), 1.0)

    def test_singleton_class_rejected(self):
        with pytest.raises(DatasetError):
            split(tiny_dataset(), 0.8)  # both classes have a single record


def test_saved_json_is_sorted_and_versioned(tmp_path):
    ds = gen_synthetic(SyntheticConfig(num_scenes=2, seed=0))
    path = tmp_path / "ds.json"
    save_dataset(ds, path)
    obj = json.loads(path.read_text())
    assert obj["format_version"] == 1
    assert list(obj.keys()) == sorted(obj.keys())
