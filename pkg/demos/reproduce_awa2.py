"""Reproduce the reference zero-shot result on real AwA2 image features.

Needs the widely used precomputed ZSL benchmark archive (often
distributed as `xlsa17`): per dataset it ships `res101.mat` holding
ResNet-101 features plus labels, and `att_splits.mat` holding the class
attribute matrix and the proposed-split row indices. Place the two AwA2
files in one directory and run

    python reproduce_awa2.py --data-dir /path/to/AWA2

With the default settings below, the per-class accuracy on the unseen
classes should land within a few points of the reference value 65.8%.
Expect a long run: about 24k training rows of width 2048, 50 epochs on
one core. This script is deliberately not part of the test suite's
normal run; the acceptance suite invokes it only when ZSLGEN_AWA2_DIR
is set.
"""

import argparse
import os
import time

import numpy as np

from zslgen.cvae import CvaeConfig
from zslgen.data import ZslDataset
from zslgen.evaluation import run_disjoint_zsl
from zslgen.svm import SvmConfig


def load_awa2(data_dir: str) -> ZslDataset:
    try:
        from scipy.io import loadmat
    except ImportError:
        raise SystemExit("this script needs scipy to read .mat files: pip install scipy")
    res = loadmat(os.path.join(data_dir, "res101.mat"))
    splits = loadmat(os.path.join(data_dir, "att_splits.mat"))

    features = np.ascontiguousarray(res["features"].T, dtype=np.float64)  # (n, 2048)
    labels = res["labels"].ravel().astype(np.int64) - 1                   # 0-based
    attributes = np.ascontiguousarray(splits["att"].T, dtype=np.float64)  # (50, 85)
    trainval = splits["trainval_loc"].ravel().astype(np.int64) - 1
    test_unseen = splits["test_unseen_loc"].ravel().astype(np.int64) - 1

    keep = np.concatenate([trainval, test_unseen])
    seen = tuple(sorted(set(labels[trainval].tolist())))
    unseen = tuple(sorted(set(labels[test_unseen].tolist())))
    return ZslDataset(features[keep], labels[keep], attributes, seen, unseen)


def run_reproduction(data_dir: str, epochs: int = 50, n_pseudo: int = 300,
                     seed: int = 1) -> float:
    dataset = load_awa2(data_dir)
    print(f"loaded {dataset.n} rows, {len(dataset.seen_classes)} seen / "
          f"{len(dataset.unseen_classes)} unseen classes, "
          f"d={dataset.feature_dim}, q={dataset.attr_dim}")
    config = CvaeConfig(feature_dim=dataset.feature_dim, attr_dim=dataset.attr_dim,
                        epochs=epochs, seed=seed)
    t0 = time.time()
    report = run_disjoint_zsl(dataset, config, SvmConfig(), n_pseudo=n_pseudo)
    print(f"finished in {(time.time() - t0) / 60.0:.1f} min")
    print(f"unseen per-class accuracy: {100.0 * report.per_class_acc:.1f} "
          f"(reference 65.8)")
    return report.per_class_acc


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", required=True,
                    help="directory holding res101.mat and att_splits.mat")
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--n-pseudo", type=int, default=300)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    run_reproduction(args.data_dir, epochs=args.epochs, n_pseudo=args.n_pseudo,
                     seed=args.seed)
