"""Metrics, report serialization, holdout split, and the two protocols."""

import json

import numpy as np
import pytest

import zslgen.evaluation as evaluation
from conftest import make_synth_union, make_toy_dataset
from zslgen.cvae import CvaeConfig
from zslgen.errors import ConfigError, InputError
from zslgen.evaluation import (
    EvalReport,
    accuracy_counts,
    harmonic_mean,
    per_class_accuracy,
    per_image_accuracy,
    run_disjoint_zsl,
    run_generalized_zsl,
    stratified_holdout,
    top_k_accuracy,
)
from zslgen.svm import SvmConfig


def small_cvae_config(ds, **overrides):
    base = dict(feature_dim=ds.feature_dim, attr_dim=ds.attr_dim, latent_dim=4,
                enc_hidden1=24, enc_hidden2=24, dec_hidden=24, dropout_rate=0.1,
                batch_size=16, epochs=60, lr=1e-2, seed=3)
    base.update(overrides)
    return CvaeConfig(**base)


# ---------------------------------------------------------------------------
# metrics


def test_per_class_vs_per_image_divergence():
    # one class with 1/1 right, another with 0/3 right
    labels = np.array([0, 1, 1, 1])
    preds = np.array([0, 0, 0, 0])
    assert per_class_accuracy(preds, labels) == 0.5
    assert per_image_accuracy(preds, labels) == 0.25


def test_per_class_accuracy_invariant_under_class_duplication():
    labels = np.array([0, 1, 1, 1])
    preds = np.array([0, 0, 0, 0])
    # triplicate the class-0 row: per-class stays, per-image moves
    labels_dup = np.concatenate([labels, [0, 0]])
    preds_dup = np.concatenate([preds, [0, 0]])
    assert per_class_accuracy(preds_dup, labels_dup) == 0.5
    assert per_image_accuracy(preds_dup, labels_dup) == 0.5
    assert per_image_accuracy(preds_dup, labels_dup) != per_image_accuracy(preds, labels)


def test_per_class_accuracy_ignores_absent_classes():
    labels = np.array([3, 3, 7])
    preds = np.array([3, 7, 7])
    # classes 3 and 7 present: recalls 0.5 and 1.0
    assert per_class_accuracy(preds, labels, class_set=(3, 7, 9)) == 0.75
    with pytest.raises(InputError):
        per_class_accuracy(preds, labels, class_set=(3, 9))  # 7 unexpected
    with pytest.raises(InputError):
        per_class_accuracy(np.array([]), np.array([]))


def test_accuracy_counts():
    labels = np.array([0, 0, 1, 2, 2, 2])
    preds = np.array([0, 1, 1, 2, 2, 0])
    correct, total = accuracy_counts(preds, labels)
    assert correct == {0: 1, 1: 1, 2: 2}
    assert total == {0: 2, 1: 1, 2: 3}


def test_harmonic_mean_values():
    assert harmonic_mean(1.0, 0.0) == 0.0
    assert harmonic_mean(0.0, 0.0) == 0.0
    assert harmonic_mean(0.5, 0.5) == 0.5
    np.testing.assert_allclose(harmonic_mean(0.6, 0.3), 0.4)


def test_harmonic_mean_bounded_by_arithmetic_mean():
    rng = np.random.default_rng(0)
    for _ in range(500):
        s, u = rng.random(2)
        h = harmonic_mean(s, u)
        assert h <= (s + u) / 2.0 + 1e-15
        if abs(s - u) > 1e-9:
            assert h < (s + u) / 2.0
    assert harmonic_mean(0.7, 0.7) == 0.7  # equality iff s == u


def test_top_k_accuracy_and_monotonicity():
    topk = np.array([[1, 2], [0, 2], [2, 0]])
    labels = np.array([2, 1, 0])
    assert top_k_accuracy(topk, labels) == 2.0 / 3.0
    assert top_k_accuracy(topk[:, :1], labels) == 0.0
    # randomized monotonicity: growing k never hurts
    rng = np.random.default_rng(4)
    scores = rng.standard_normal((50, 6))
    labels = rng.integers(0, 6, 50)
    order = np.argsort(-scores, axis=1, kind="stable")
    accs = [top_k_accuracy(order[:, :k], labels) for k in range(1, 7)]
    assert all(a <= b + 1e-15 for a, b in zip(accs, accs[1:]))
    assert accs[-1] == 1.0


# ---------------------------------------------------------------------------
# report serialization


def test_report_json_layout_and_determinism():
    report = EvalReport(protocol="disjoint", per_class_acc=0.5, per_image_acc=0.25,
                        per_class_correct={3: 1}, per_class_total={3: 2},
                        config={"seed": 1})
    blob = report.to_json_bytes()
    parsed = json.loads(blob)
    assert parsed["metrics"]["per_class_acc"] == 0.5
    assert "seen_acc" not in parsed["metrics"]  # optional fields omitted
    assert parsed["per_class"]["correct"] == {"3": 1}
    assert blob == report.to_json_bytes()
    report.seen_acc = 0.9
    assert "seen_acc" in json.loads(report.to_json_bytes())["metrics"]
    # artifacts never leak into the serialized form
    report.artifacts = {"model": object()}
    json.loads(report.to_json_bytes())


# ---------------------------------------------------------------------------
# stratified holdout


def test_stratified_holdout_sizes_and_partition():
    ds = make_toy_dataset(num_seen=3, num_unseen=1, per_class=10, seed=0)
    seen = ds.rows_for_classes(ds.seen_classes)
    train, hold = stratified_holdout(seen, 0.2, seed=5)
    assert hold.n == 3 * 2  # ceil(0.2 * 10) per class
    assert train.n == 3 * 8
    for cid in (0, 1, 2):
        assert (hold.labels == cid).sum() == 2
    # partition: together they are exactly the original rows
    merged = np.sort(np.concatenate([train.features, hold.features]), axis=0)
    np.testing.assert_array_equal(merged, np.sort(seen.features, axis=0))


def test_stratified_holdout_ceil_rounding():
    ds = make_toy_dataset(num_seen=2, num_unseen=1, per_class=7, seed=1)
    seen = ds.rows_for_classes(ds.seen_classes)
    train, hold = stratified_holdout(seen, 0.2, seed=0)
    # ceil(1.4) = 2 rows per class
    assert (hold.labels == 0).sum() == 2
    assert (hold.labels == 1).sum() == 2


def test_stratified_holdout_determinism_and_validation():
    ds = make_toy_dataset(num_seen=3, num_unseen=1, per_class=10, seed=0)
    seen = ds.rows_for_classes(ds.seen_classes)
    _, h1 = stratified_holdout(seen, 0.2, seed=9)
    _, h2 = stratified_holdout(seen, 0.2, seed=9)
    np.testing.assert_array_equal(h1.features, h2.features)
    _, h3 = stratified_holdout(seen, 0.2, seed=10)
    assert h1.features.shape == h3.features.shape
    assert not np.array_equal(h1.features, h3.features)
    with pytest.raises(ConfigError):
        stratified_holdout(seen, 0.0, seed=0)
    with pytest.raises(ConfigError):
        stratified_holdout(seen, 1.0, seed=0)


def test_stratified_holdout_rejects_tiny_classes():
    ds = make_toy_dataset(num_seen=2, num_unseen=1, per_class=1, seed=0)
    seen = ds.rows_for_classes(ds.seen_classes)
    with pytest.raises(InputError) as exc:
        stratified_holdout(seen, 0.2, seed=0)
    assert "class 0" in str(exc.value)


# ---------------------------------------------------------------------------
# protocols
#
# Accuracy thresholds run on a small attribute-driven benchmark where the
# class centers are a hidden function of the attributes, so generalizing to
# unseen classes is actually possible. Mechanics-only tests (determinism,
# stage tags, spies) use the cheaper random-center toy.


@pytest.fixture(scope="module")
def proto_ds():
    return make_synth_union(num_seen=10, num_unseen=4, d=24, q=8,
                            per_class=50, seed=12)


def proto_cvae_config(ds, **overrides):
    base = dict(feature_dim=ds.feature_dim, attr_dim=ds.attr_dim, latent_dim=8,
                enc_hidden1=96, enc_hidden2=96, dec_hidden=96, dropout_rate=0.1,
                batch_size=25, epochs=50, lr=1e-3, seed=3)
    base.update(overrides)
    return CvaeConfig(**base)


@pytest.fixture(scope="module")
def disjoint_report(proto_ds):
    return run_disjoint_zsl(proto_ds, proto_cvae_config(proto_ds),
                            SvmConfig(max_epochs=300), n_pseudo=100)


@pytest.fixture(scope="module")
def generalized_report(proto_ds):
    return run_generalized_zsl(proto_ds, proto_cvae_config(proto_ds),
                               SvmConfig(max_epochs=300), n_pseudo=100,
                               holdout_frac=0.2)


def test_disjoint_protocol_end_to_end(proto_ds, disjoint_report):
    report = disjoint_report
    assert report.protocol == "disjoint"
    assert report.per_class_acc > 0.9
    assert report.seen_acc is None and report.harmonic_mean is None
    assert set(report.per_class_total) == set(proto_ds.unseen_classes)
    assert report.config["n_pseudo"] == 100
    assert report.artifacts["trace"].epochs == 50
    # pseudo data exists only for unseen classes
    pseudo = report.artifacts["pseudo"]
    assert set(np.unique(pseudo.labels)) == set(proto_ds.unseen_classes)
    assert pseudo.n == 100 * len(proto_ds.unseen_classes)


def test_disjoint_protocol_is_deterministic():
    ds = make_toy_dataset(num_seen=4, num_unseen=2, d=8, q=3, per_class=12, seed=10)
    cfg = small_cvae_config(ds, epochs=4)
    r1 = run_disjoint_zsl(ds, cfg, SvmConfig(max_epochs=60), n_pseudo=10)
    r2 = run_disjoint_zsl(ds, cfg, SvmConfig(max_epochs=60), n_pseudo=10)
    assert r1.to_json_bytes() == r2.to_json_bytes()


def test_disjoint_never_trains_on_unseen_rows(monkeypatch):
    ds = make_toy_dataset(num_seen=4, num_unseen=2, d=8, q=3, per_class=12, seed=10)
    seen_by_trainer = []
    real_train = evaluation.train_cvae

    def spy(dataset, config):
        seen_by_trainer.append(set(np.unique(dataset.labels).tolist()))
        return real_train(dataset, config)

    monkeypatch.setattr(evaluation, "train_cvae", spy)
    run_disjoint_zsl(ds, small_cvae_config(ds, epochs=2),
                     SvmConfig(max_epochs=10), n_pseudo=5)
    assert seen_by_trainer and all(
        labels <= set(ds.seen_classes) for labels in seen_by_trainer)


def test_disjoint_top_k(proto_ds):
    report = run_disjoint_zsl(proto_ds, proto_cvae_config(proto_ds, epochs=8),
                              SvmConfig(max_epochs=50), n_pseudo=20, top_k=2)
    assert report.top_k == 2
    assert report.top_k_acc >= report.per_image_acc
    # k equal to the number of unseen classes is always perfect
    r2 = run_disjoint_zsl(proto_ds, proto_cvae_config(proto_ds, epochs=8),
                          SvmConfig(max_epochs=50), n_pseudo=20,
                          top_k=len(proto_ds.unseen_classes))
    assert r2.top_k_acc == 1.0


def test_disjoint_validation_and_stage_tagging():
    ds = make_toy_dataset(num_seen=3, num_unseen=2, per_class=6, seed=2)
    with pytest.raises(InputError):
        run_disjoint_zsl(ds, small_cvae_config(ds), SvmConfig(), n_pseudo=0)
    # one unseen class -> the classifier stage cannot fit two sides
    one_unseen = make_toy_dataset(num_seen=2, num_unseen=1, per_class=6, seed=2)
    with pytest.raises(InputError) as exc:
        run_disjoint_zsl(one_unseen, small_cvae_config(one_unseen, epochs=1),
                         SvmConfig(max_epochs=5), n_pseudo=4)
    assert getattr(exc.value, "stage", None) == "fit"


def test_generalized_protocol_end_to_end(proto_ds, generalized_report):
    report = generalized_report
    assert report.protocol == "generalized"
    assert report.seen_acc is not None and report.unseen_acc is not None
    expected_h = harmonic_mean(report.seen_acc, report.unseen_acc)
    assert report.harmonic_mean == expected_h
    assert report.seen_acc > 0.8
    assert report.unseen_acc > 0.5
    assert report.harmonic_mean > 0.6
    # test rows cover every class: 10 seen (holdout) + 4 unseen
    assert set(report.per_class_total) == set(range(14))
    # holdout sizing: ceil(0.2 * 50) = 10 per seen class
    for cid in proto_ds.seen_classes:
        assert report.per_class_total[cid] == 10
    for cid in proto_ds.unseen_classes:
        assert report.per_class_total[cid] == 50
    # pseudo data covers all classes
    pseudo = report.artifacts["pseudo"]
    assert set(np.unique(pseudo.labels)) == set(range(14))
    assert report.config["holdout_frac"] == 0.2


def test_generalized_accepts_pretrained_model():
    ds = make_toy_dataset(num_seen=4, num_unseen=2, d=8, q=3, per_class=12, seed=10)
    cfg = small_cvae_config(ds, epochs=6)
    full = run_generalized_zsl(ds, cfg, SvmConfig(max_epochs=120), n_pseudo=40)
    # retrain exactly as the protocol would, then hand the model in
    seen_rows = ds.rows_for_classes(ds.seen_classes)
    train_rows, _ = stratified_holdout(seen_rows, 0.2, cfg.seed)
    model, _ = evaluation.train_cvae(train_rows, cfg)
    reused = run_generalized_zsl(ds, cfg, SvmConfig(max_epochs=120),
                                 n_pseudo=40, model=model)
    assert reused.to_json_bytes() == full.to_json_bytes()


def test_protocols_reject_missing_split_sides():
    ds = make_toy_dataset(num_seen=3, num_unseen=2, per_class=4, seed=0)
    no_unseen = ds.rows_for_classes(ds.seen_classes)
    stripped = type(ds)(no_unseen.features, no_unseen.labels, ds.attributes,
                        ds.seen_classes, ())
    with pytest.raises(InputError):
        run_disjoint_zsl(stripped, small_cvae_config(ds, epochs=1), SvmConfig())
    with pytest.raises(InputError):
        run_generalized_zsl(stripped, small_cvae_config(ds, epochs=1), SvmConfig())
