"""Accuracy metrics and the two zero-shot evaluation protocols.

The disjoint protocol trains the generator on seen-class rows, fits a
classifier purely on synthetic unseen-class data, and scores it on the
real unseen-class rows. The generalized protocol additionally holds out
a fraction of the seen rows, generates synthetic data for every class,
and reports seen and unseen accuracy plus their harmonic mean, which
punishes classifiers that ignore one side.
"""

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .cvae import CvaeConfig, CvaeModel, generate_pseudo, train_cvae
from .data import ZslDataset
from .errors import ConfigError, InputError
from .numerics import make_rng
from .svm import SvmConfig, svm_fit, svm_predict, top_k_labels


def per_image_accuracy(preds, labels) -> float:
    """Plain fraction of correct predictions."""
    preds, labels = _check_pairs(preds, labels)
    return float((preds == labels).mean())


def per_class_accuracy(preds, labels, class_set=None) -> float:
    """Unweighted mean of per-class recalls.

    Each class present in labels contributes its own accuracy with equal
    weight, so rare classes count as much as common ones. Classes from
    class_set that never occur in labels are simply not represented.
    """
    preds, labels = _check_pairs(preds, labels)
    if class_set is not None:
        stray = set(np.unique(labels).tolist()) - {int(c) for c in class_set}
        if stray:
            raise InputError(f"labels outside the expected class set: {sorted(stray)}")
    recalls = [float((preds[labels == cid] == cid).mean()) for cid in np.unique(labels)]
    return float(np.mean(recalls))


def accuracy_counts(preds, labels):
    """Per-class (correct, total) dictionaries keyed by class id."""
    preds, labels = _check_pairs(preds, labels)
    correct = {}
    total = {}
    for cid in np.unique(labels):
        mask = labels == cid
        correct[int(cid)] = int((preds[mask] == cid).sum())
        total[int(cid)] = int(mask.sum())
    return correct, total


def top_k_accuracy(topk, labels) -> float:
    """Fraction of rows whose true label appears in the top-k candidates."""
    topk = np.asarray(topk)
    labels = np.asarray(labels)
    if topk.ndim != 2 or labels.ndim != 1 or topk.shape[0] != labels.shape[0]:
        raise InputError(f"need (n, k) candidates and (n,) labels, got {topk.shape} "
                         f"and {labels.shape}")
    if labels.size == 0:
        raise InputError("no rows to score")
    return float((topk == labels[:, None]).any(axis=1).mean())


def harmonic_mean(seen_acc: float, unseen_acc: float) -> float:
    """2su/(s+u), the usual balanced summary; 0 when both sides are 0."""
    if seen_acc + unseen_acc == 0.0:
        return 0.0
    return 2.0 * seen_acc * unseen_acc / (seen_acc + unseen_acc)


def _check_pairs(preds, labels):
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.ndim != 1 or preds.shape != labels.shape:
        raise InputError(f"preds {preds.shape} and labels {labels.shape} must match 1-D")
    if labels.size == 0:
        raise InputError("no rows to score")
    return preds, labels


@dataclass
class EvalReport:
    """Protocol outcome; to_json_bytes gives a canonical serialization.

    artifacts carries in-memory intermediates (model, pseudo data, loss
    trace, classifier) for callers that want to inspect a run; it never
    enters the JSON form.
    """

    protocol: str
    per_class_acc: float
    per_image_acc: float
    per_class_correct: dict
    per_class_total: dict
    seen_acc: float | None = None
    unseen_acc: float | None = None
    harmonic_mean: float | None = None
    top_k: int | None = None
    top_k_acc: float | None = None
    config: dict = field(default_factory=dict)
    artifacts: dict | None = field(default=None, repr=False, compare=False)

    def to_json_dict(self) -> dict:
        out = {
            "protocol": self.protocol,
            "config": self.config,
            "metrics": {
                "per_class_acc": self.per_class_acc,
                "per_image_acc": self.per_image_acc,
            },
            "per_class": {
                "correct": {str(k): v for k, v in self.per_class_correct.items()},
                "total": {str(k): v for k, v in self.per_class_total.items()},
            },
        }
        for name in ("seen_acc", "unseen_acc", "harmonic_mean", "top_k_acc"):
            value = getattr(self, name)
            if value is not None:
                out["metrics"][name] = value
        if self.top_k is not None:
            out["metrics"]["top_k"] = self.top_k
        return out

    def to_json_bytes(self) -> bytes:
        """Sorted keys and fixed layout: equal reports give equal bytes."""
        return (json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


@contextmanager
def _stage(name: str):
    """Tag exceptions with the pipeline stage they escaped from."""
    try:
        yield
    except Exception as err:
        if not hasattr(err, "stage"):
            err.stage = name
        raise


def _protocol_rngs(seed: int):
    """Independent streams for the holdout draw and pseudo-data generation.

    Derived from one seed so a protocol run, or a train/eval pair on the
    same seed, always agrees on both draws.
    """
    holdout_seq, gen_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(holdout_seq), np.random.default_rng(gen_seq)


def stratified_holdout(dataset: ZslDataset, frac: float, seed: int):
    """Split off ceil(frac * n_c) rows of every seen class.

    Returns (train, holdout). The draw depends only on the seed and the
    dataset, so repeated calls agree (used to keep a separately trained
    checkpoint consistent with a later evaluation).
    """
    if not 0.0 < frac < 1.0:
        raise ConfigError(f"holdout fraction must be in (0, 1), got {frac}")
    rng, _ = _protocol_rngs(seed)
    hold_idx = []
    for cid in dataset.seen_classes:
        rows = np.where(dataset.labels == cid)[0]
        if rows.size < 2:
            raise InputError(f"seen class {cid} has {rows.size} row(s); need at least 2 "
                             f"to hold some out")
        n_hold = math.ceil(frac * rows.size)
        if n_hold >= rows.size:
            raise InputError(f"holdout fraction {frac} would consume all {rows.size} rows "
                             f"of seen class {cid}")
        hold_idx.append(rng.choice(rows, size=n_hold, replace=False))
    hold_idx = np.sort(np.concatenate(hold_idx))
    mask = np.zeros(dataset.n, dtype=bool)
    mask[hold_idx] = True
    return dataset.subset(~mask), dataset.subset(mask)


def _config_echo(protocol: str, dataset: ZslDataset, cvae_config: CvaeConfig,
                 svm_config: SvmConfig, n_pseudo: int, **extra) -> dict:
    echo = {
        "protocol": protocol,
        "seed": cvae_config.seed,
        "n_pseudo": n_pseudo,
        "feature_dim": dataset.feature_dim,
        "attr_dim": dataset.attr_dim,
        "num_classes": dataset.num_classes,
        "seen_classes": list(dataset.seen_classes),
        "unseen_classes": list(dataset.unseen_classes),
        "cvae": {
            "latent_dim": cvae_config.latent_dim,
            "enc_hidden1": cvae_config.enc_hidden1,
            "enc_hidden2": cvae_config.enc_hidden2,
            "dec_hidden": cvae_config.dec_hidden,
            "dropout_rate": cvae_config.dropout_rate,
            "batch_size": cvae_config.batch_size,
            "epochs": cvae_config.epochs,
            "lr": cvae_config.lr,
        },
        "svm": {
            "cost": svm_config.cost,
            "max_epochs": svm_config.max_epochs,
            "tol": svm_config.tol,
        },
    }
    echo.update(extra)
    return echo


def _validate_protocol_inputs(dataset: ZslDataset, n_pseudo: int):
    if not dataset.seen_classes:
        raise InputError("dataset declares no seen classes")
    if not dataset.unseen_classes:
        raise InputError("dataset declares no unseen classes")
    if n_pseudo < 1:
        raise InputError(f"n_pseudo must be >= 1, got {n_pseudo}")


def run_disjoint_zsl(dataset: ZslDataset, cvae_config: CvaeConfig, svm_config: SvmConfig,
                     n_pseudo: int = 300, top_k: int | None = None,
                     model: CvaeModel | None = None) -> EvalReport:
    """Seen rows train the generator; unseen rows are the test set.

    Synthetic data is generated only for unseen classes, so the
    classifier never sees a seen-class sample, real or fake. Pass a
    pre-trained model to skip the training stage.
    """
    _validate_protocol_inputs(dataset, n_pseudo)
    _, gen_rng = _protocol_rngs(cvae_config.seed)

    trace = None
    with _stage("train"):
        train_rows = dataset.rows_for_classes(dataset.seen_classes)
        if model is None:
            model, trace = train_cvae(train_rows, cvae_config)
    with _stage("generate"):
        pseudo = generate_pseudo(model, dataset.unseen_classes, dataset.attributes,
                                 n_pseudo, gen_rng)
    with _stage("fit"):
        classifier = svm_fit(pseudo, svm_config)
    with _stage("evaluate"):
        test_rows = dataset.rows_for_classes(dataset.unseen_classes)
        if test_rows.n == 0:
            raise InputError("no unseen-class rows to evaluate")
        preds = svm_predict(classifier, test_rows.features)
        correct, total = accuracy_counts(preds, test_rows.labels)
        report = EvalReport(
            protocol="disjoint",
            per_class_acc=per_class_accuracy(preds, test_rows.labels,
                                             class_set=dataset.unseen_classes),
            per_image_acc=per_image_accuracy(preds, test_rows.labels),
            per_class_correct=correct,
            per_class_total=total,
            config=_config_echo("disjoint", dataset, cvae_config, svm_config, n_pseudo),
        )
        if top_k is not None:
            report.top_k = top_k
            report.top_k_acc = top_k_accuracy(top_k_labels(classifier, test_rows.features, top_k),
                                              test_rows.labels)
    report.artifacts = {"model": model, "trace": trace, "pseudo": pseudo,
                        "classifier": classifier}
    return report


def run_generalized_zsl(dataset: ZslDataset, cvae_config: CvaeConfig, svm_config: SvmConfig,
                        n_pseudo: int = 300, holdout_frac: float = 0.2,
                        top_k: int | None = None,
                        model: CvaeModel | None = None) -> EvalReport:
    """Generalized protocol: test rows may come from any class.

    A stratified fraction of every seen class is held out before
    training. The classifier is fit on synthetic data for all classes
    and must pick among all of them; real held-out seen rows and real
    unseen rows form the test set. A pre-trained model passed in must
    have been trained on the same seed's holdout split to keep the seen
    evaluation honest.
    """
    _validate_protocol_inputs(dataset, n_pseudo)
    _, gen_rng = _protocol_rngs(cvae_config.seed)

    trace = None
    with _stage("split"):
        seen_rows = dataset.rows_for_classes(dataset.seen_classes)
        train_rows, holdout_rows = stratified_holdout(seen_rows, holdout_frac,
                                                      cvae_config.seed)
    with _stage("train"):
        if model is None:
            model, trace = train_cvae(train_rows, cvae_config)
    with _stage("generate"):
        all_classes = dataset.seen_classes + dataset.unseen_classes
        pseudo = generate_pseudo(model, all_classes, dataset.attributes, n_pseudo, gen_rng)
    with _stage("fit"):
        classifier = svm_fit(pseudo, svm_config)
    with _stage("evaluate"):
        unseen_rows = dataset.rows_for_classes(dataset.unseen_classes)
        if unseen_rows.n == 0:
            raise InputError("no unseen-class rows to evaluate")
        seen_preds = svm_predict(classifier, holdout_rows.features)
        unseen_preds = svm_predict(classifier, unseen_rows.features)
        seen_acc = per_class_accuracy(seen_preds, holdout_rows.labels)
        unseen_acc = per_class_accuracy(unseen_preds, unseen_rows.labels)
        all_preds = np.concatenate([seen_preds, unseen_preds])
        all_labels = np.concatenate([holdout_rows.labels, unseen_rows.labels])
        correct, total = accuracy_counts(all_preds, all_labels)
        report = EvalReport(
            protocol="generalized",
            per_class_acc=per_class_accuracy(all_preds, all_labels),
            per_image_acc=per_image_accuracy(all_preds, all_labels),
            per_class_correct=correct,
            per_class_total=total,
            seen_acc=seen_acc,
            unseen_acc=unseen_acc,
            harmonic_mean=harmonic_mean(seen_acc, unseen_acc),
            config=_config_echo("generalized", dataset, cvae_config, svm_config, n_pseudo,
                                holdout_frac=holdout_frac),
        )
        if top_k is not None:
            test_feats = np.concatenate([holdout_rows.features, unseen_rows.features])
            report.top_k = top_k
            report.top_k_acc = top_k_accuracy(top_k_labels(classifier, test_feats, top_k),
                                              all_labels)
    report.artifacts = {"model": model, "trace": trace, "pseudo": pseudo,
                        "classifier": classifier, "holdout": holdout_rows}
    return report
