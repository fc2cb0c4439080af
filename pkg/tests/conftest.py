"""Shared test helpers: finite-difference gradients and tiny datasets."""

import numpy as np
import pytest

from zslgen.data import SynthSpec, ZslDataset, synth_generate


def finite_difference_grads(fn, arrays, h=1e-5):
    """Central-difference gradient of scalar fn() w.r.t. each array.

    fn takes no arguments and must be a deterministic function of the
    arrays, which are perturbed in place one entry at a time.
    """
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            saved = a[idx]
            a[idx] = saved + h
            f_plus = fn()
            a[idx] = saved - h
            f_minus = fn()
            a[idx] = saved
            g[idx] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-3):
    """Worst-case elementwise relative error with a small absolute floor.

    The floor keeps finite-difference roundoff on near-zero entries from
    dominating while still flagging genuinely wrong gradients.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def make_toy_dataset(num_seen=3, num_unseen=2, d=6, q=3, per_class=8, seed=0,
                     sigma=0.05):
    """Small labeled dataset with well-separated class clusters."""
    rng = np.random.default_rng(seed)
    num_classes = num_seen + num_unseen
    attrs = rng.random((num_classes, q))
    centers = rng.standard_normal((num_classes, d)) * 2.0
    feats = []
    labels = []
    for cid in range(num_classes):
        feats.append(centers[cid] + sigma * rng.standard_normal((per_class, d)))
        labels.append(np.full(per_class, cid, dtype=np.int64))
    return ZslDataset(np.concatenate(feats), np.concatenate(labels), attrs,
                      tuple(range(num_seen)), tuple(range(num_seen, num_classes)))


def make_synth_union(num_seen=4, num_unseen=2, d=8, q=3, per_class=30,
                     sigma=0.05, seed=10):
    """Small attribute-driven benchmark as one dataset (seen + unseen rows).

    Unlike make_toy_dataset, class centers here are a function of the
    attributes, so a model conditioned on attributes can genuinely
    generalize to the unseen classes.
    """
    spec = SynthSpec(num_seen=num_seen, num_unseen=num_unseen, attr_dim=q,
                     feature_dim=d, samples_per_class=per_class,
                     noise_sigma=sigma, seed=seed)
    train, test, _ = synth_generate(spec)
    return ZslDataset(np.concatenate([train.features, test.features]),
                      np.concatenate([train.labels, test.labels]),
                      train.attributes, train.seen_classes, train.unseen_classes)


@pytest.fixture(scope="session")
def synth_default():
    """The standard synthetic benchmark (15 seen / 5 unseen, seed 1)."""
    return synth_generate(SynthSpec())


@pytest.fixture(scope="session")
def synth_union(synth_default):
    """Same benchmark as one dataset holding seen and unseen rows."""
    train, test, _ = synth_default
    return ZslDataset(np.concatenate([train.features, test.features]),
                      np.concatenate([train.labels, test.labels]),
                      train.attributes, train.seen_classes, train.unseen_classes)
