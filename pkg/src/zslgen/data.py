"""Dataset container, on-disk formats, checkpoints, synthetic benchmark.

On-disk formats (all little-endian):

  matrix, binary: magic "ZSLM", u32 rows, u32 cols, then rows*cols
                  float32 values row-major; exactly 12 + 4*rows*cols bytes
  matrix, csv:    one row per line, comma-separated decimal values
  labels:         one 0-based class id per line
  split:          two lines, "seen <ids...>" then "unseen <ids...>"
  checkpoint:     magic "ZSLC", u32 version (1), u32 entry count, then per
                  entry a u16 name length, the UTF-8 name, and a binary
                  matrix as above

Binary matrices store float32 and are widened to float64 on load, so a
save/load round trip of float64 arrays is only float32-accurate; a
second round trip is bit-exact.
"""

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError, InputError
from .numerics import Matrix, make_rng

MATRIX_MAGIC = b"ZSLM"
CHECKPOINT_MAGIC = b"ZSLC"
CHECKPOINT_VERSION = 1

# synthetic benchmark: minimum pairwise distance between class attribute
# vectors, and how many rejection draws to tolerate before giving up
MIN_ATTR_DISTANCE = 0.5
MAX_ATTR_TRIES = 10_000


@dataclass(frozen=True)
class ZslDataset:
    """Feature rows with labels, class attributes, and a seen/unseen split.

    features: (n, d) float64, labels: (n,) int64 into the attribute
    table, attributes: (num_classes, q) float64. Every label must belong
    to the seen or unseen set and the two sets must be disjoint.
    """

    features: Matrix
    labels: np.ndarray
    attributes: Matrix
    seen_classes: tuple
    unseen_classes: tuple

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        attributes = np.asarray(self.attributes, dtype=np.float64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "seen_classes", tuple(sorted(int(c) for c in self.seen_classes)))
        object.__setattr__(self, "unseen_classes",
                           tuple(sorted(int(c) for c in self.unseen_classes)))
        if features.ndim != 2:
            raise InputError(f"features must be 2-D, got ndim={features.ndim}")
        if attributes.ndim != 2:
            raise InputError(f"attributes must be 2-D, got ndim={attributes.ndim}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise InputError(
                f"labels must be one per feature row: {labels.shape} vs {features.shape}")
        if not np.isfinite(features).all():
            bad = int(np.where(~np.isfinite(features).all(axis=1))[0][0])
            raise InputError(f"features contain a non-finite value (row {bad})")
        if not np.isfinite(attributes).all():
            bad = int(np.where(~np.isfinite(attributes).all(axis=1))[0][0])
            raise InputError(f"attributes contain a non-finite value (row {bad})")
        num_classes = attributes.shape[0]
        seen = set(self.seen_classes)
        unseen = set(self.unseen_classes)
        overlap = seen & unseen
        if overlap:
            raise InputError(f"seen and unseen classes overlap: {sorted(overlap)}")
        for cid in seen | unseen:
            if not 0 <= cid < num_classes:
                raise InputError(
                    f"class id {cid} outside the attribute table (num_classes={num_classes})")
        known = seen | unseen
        if labels.size:
            if labels.min() < 0 or labels.max() >= num_classes:
                bad = int(np.where((labels < 0) | (labels >= num_classes))[0][0])
                raise InputError(f"label {labels[bad]} at row {bad} outside the attribute table")
            stray = set(np.unique(labels).tolist()) - known
            if stray:
                raise InputError(f"labels reference classes outside the split: {sorted(stray)}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def attr_dim(self) -> int:
        return self.attributes.shape[1]

    @property
    def num_classes(self) -> int:
        return self.attributes.shape[0]

    def subset(self, mask) -> "ZslDataset":
        """Same attribute table and split, rows restricted by a boolean mask or index array."""
        return ZslDataset(self.features[mask], self.labels[mask], self.attributes,
                          self.seen_classes, self.unseen_classes)

    def rows_for_classes(self, class_ids) -> "ZslDataset":
        wanted = np.isin(self.labels, np.asarray(list(class_ids), dtype=np.int64))
        return self.subset(wanted)


# ---------------------------------------------------------------------------
# matrix files


def save_matrix(path, m: Matrix, fmt: str = "binary") -> None:
    """Write a matrix as binary (float32) or csv."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InputError(f"can only save 2-D matrices, got ndim={m.ndim}")
    path = Path(path)
    if fmt == "binary":
        rows, cols = m.shape
        header = MATRIX_MAGIC + struct.pack("<II", rows, cols)
        path.write_bytes(header + m.astype("<f4").tobytes())
    elif fmt == "csv":
        lines = [",".join(repr(v) for v in row) for row in m.tolist()]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ConfigError(f"unknown matrix format {fmt!r}")


def _decode_binary_matrix(data: bytes, what: str) -> Matrix:
    if len(data) < 4 or data[:4] != MATRIX_MAGIC:
        raise FormatError(f"{what}: bad magic, expected {MATRIX_MAGIC!r}", offset=0)
    if len(data) < 12:
        raise FormatError(f"{what}: truncated header", offset=len(data))
    rows, cols = struct.unpack_from("<II", data, 4)
    expected = 12 + 4 * rows * cols
    if len(data) != expected:
        raise FormatError(
            f"{what}: {rows}x{cols} matrix needs {expected} bytes, file has {len(data)}",
            offset=min(len(data), expected))
    values = np.frombuffer(data, dtype="<f4", offset=12)
    return values.astype(np.float64).reshape(rows, cols)


def _parse_csv_matrix(path: Path, what: str) -> Matrix:
    rows = []
    width = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if width is None:
                    width = len(parts)
                elif len(parts) != width:
                    raise FormatError(
                        f"{what}: line {lineno} has {len(parts)} values, expected {width}")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise FormatError(f"{what}: line {lineno} holds a non-numeric value") from None
    except UnicodeDecodeError as err:
        raise FormatError(f"{what}: neither a binary matrix nor decodable text",
                          offset=err.start) from None
    if not rows:
        raise FormatError(f"{what}: no rows found")
    return np.asarray(rows, dtype=np.float64)


def load_matrix(path, fmt: str | None = None) -> Matrix:
    """Read a matrix file; fmt is "binary", "csv", or None to sniff the magic."""
    path = Path(path)
    what = path.name
    if fmt is None:
        with open(path, "rb") as fh:
            fmt = "binary" if fh.read(4) == MATRIX_MAGIC else "csv"
    if fmt == "binary":
        m = _decode_binary_matrix(path.read_bytes(), what)
    elif fmt == "csv":
        m = _parse_csv_matrix(path, what)
    else:
        raise ConfigError(f"unknown matrix format {fmt!r}")
    finite_rows = np.isfinite(m).all(axis=1)
    if not finite_rows.all():
        bad = int(np.where(~finite_rows)[0][0])
        raise DataError(f"{what}: non-finite value", row=bad)
    return m


def load_features(path, fmt: str | None = None) -> Matrix:
    return load_matrix(path, fmt=fmt)


def load_attributes(path, fmt: str | None = None) -> Matrix:
    return load_matrix(path, fmt=fmt)


# ---------------------------------------------------------------------------
# labels and split files


def save_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    Path(path).write_text("".join(f"{v}\n" for v in labels.tolist()))


def load_labels(path) -> np.ndarray:
    """One 0-based integer per line."""
    path = Path(path)
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                value = int(line)
            except ValueError:
                raise FormatError(f"{path.name}: line {lineno} is not an integer") from None
            if value < 0:
                raise DataError(f"{path.name}: negative label {value}", row=lineno - 1)
            out.append(value)
    if not out:
        raise FormatError(f"{path.name}: no labels found")
    return np.asarray(out, dtype=np.int64)


def save_split(path, seen, unseen) -> None:
    seen_txt = " ".join(str(int(c)) for c in sorted(seen))
    unseen_txt = " ".join(str(int(c)) for c in sorted(unseen))
    Path(path).write_text(f"seen {seen_txt}\nunseen {unseen_txt}\n")


def load_split(path):
    """Returns (seen, unseen) class id tuples from a two-line split file."""
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) != 2:
        raise FormatError(f"{path.name}: expected exactly two non-empty lines, got {len(lines)}")
    groups = {}
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        key = parts[0]
        if key not in ("seen", "unseen") or key in groups:
            raise FormatError(f"{path.name}: line {lineno} must start with 'seen' or 'unseen'")
        try:
            ids = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise FormatError(f"{path.name}: line {lineno} holds a non-integer id") from None
        if any(i < 0 for i in ids):
            raise DataError(f"{path.name}: negative class id on line {lineno}", row=lineno - 1)
        groups[key] = ids
    if "seen" not in groups or "unseen" not in groups:
        raise FormatError(f"{path.name}: needs one 'seen' line and one 'unseen' line")
    overlap = set(groups["seen"]) & set(groups["unseen"])
    if overlap:
        raise InputError(f"{path.name}: classes in both splits: {sorted(overlap)}")
    return groups["seen"], groups["unseen"]


def load_dataset(features_path, labels_path, attributes_path, split_path,
                 fmt: str | None = None) -> ZslDataset:
    """Assemble a dataset from its four files; all cross-checks apply."""
    features = load_features(features_path, fmt=fmt)
    labels = load_labels(labels_path)
    attributes = load_attributes(attributes_path, fmt=fmt)
    seen, unseen = load_split(split_path)
    return ZslDataset(features, labels, attributes, seen, unseen)


def save_dataset(dataset: ZslDataset, features_path, labels_path, attributes_path,
                 split_path, fmt: str = "binary") -> None:
    save_matrix(features_path, dataset.features, fmt=fmt)
    save_labels(labels_path, dataset.labels)
    save_matrix(attributes_path, dataset.attributes, fmt=fmt)
    save_split(split_path, dataset.seen_classes, dataset.unseen_classes)


# ---------------------------------------------------------------------------
# feature standardization


def standardize(train: ZslDataset, *others):
    """Z-score features using the training rows' statistics.

    Returns the datasets in the same order with shifted/scaled features.
    Near-constant feature columns get a unit scale so nothing blows up.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)

    def apply(ds: ZslDataset) -> ZslDataset:
        return ZslDataset((ds.features - mean) / std, ds.labels, ds.attributes,
                          ds.seen_classes, ds.unseen_classes)

    out = tuple(apply(ds) for ds in (train, *others))
    return out[0] if not others else out


def standardize_dataset(dataset: ZslDataset) -> ZslDataset:
    """Z-score every row using the seen-class rows' statistics.

    The transform depends only on the dataset itself, so separate train
    and eval runs over the same files agree on it.
    """
    seen_rows = dataset.rows_for_classes(dataset.seen_classes)
    if seen_rows.n == 0:
        raise InputError("cannot standardize: no seen-class rows to take statistics from")
    mean = seen_rows.features.mean(axis=0)
    std = seen_rows.features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return ZslDataset((dataset.features - mean) / std, dataset.labels, dataset.attributes,
                      dataset.seen_classes, dataset.unseen_classes)


# ---------------------------------------------------------------------------
# synthetic benchmark


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic benchmark generator."""

    num_seen: int = 15
    num_unseen: int = 5
    attr_dim: int = 10
    feature_dim: int = 50
    samples_per_class: int = 200
    noise_sigma: float = 0.1
    seed: int = 1

    def __post_init__(self):
        for name in ("num_seen", "num_unseen", "attr_dim", "feature_dim", "samples_per_class"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.noise_sigma < 0.0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def synth_generate(spec: SynthSpec):
    """Build the synthetic benchmark; returns (train, test, centroids).

    Class attribute vectors are drawn uniformly from [0, 1]^q and kept
    pairwise at least 0.5 apart by rejection. A hidden random affine map
    followed by ReLU turns attributes into class centroids, and samples
    are centroid plus isotropic Gaussian noise. train holds the seen
    rows, test the unseen rows; centroids is the (num_classes, d)
    noise-free ground truth, the oracle a classifier is judged against.
    """
    rng = make_rng(spec.seed)
    num_classes = spec.num_seen + spec.num_unseen
    attrs = np.empty((num_classes, spec.attr_dim))
    accepted = 0
    tries = 0
    while accepted < num_classes:
        tries += 1
        if tries > MAX_ATTR_TRIES:
            raise ConfigError(
                f"could not place {num_classes} attribute vectors at pairwise distance "
                f">= {MIN_ATTR_DISTANCE} in {MAX_ATTR_TRIES} draws; lower the class count "
                f"or raise attr_dim")
        cand = rng.random(spec.attr_dim)
        if accepted:
            dists = np.linalg.norm(attrs[:accepted] - cand, axis=1)
            if dists.min() < MIN_ATTR_DISTANCE:
                continue
        attrs[accepted] = cand
        accepted += 1

    # hidden attribute-to-feature map; 1/sqrt(q) keeps pre-activations O(1)
    w = rng.standard_normal((spec.feature_dim, spec.attr_dim)) / math.sqrt(spec.attr_dim)
    b = rng.standard_normal(spec.feature_dim)
    centroids = np.maximum(attrs @ w.T + b, 0.0)

    seen = tuple(range(spec.num_seen))
    unseen = tuple(range(spec.num_seen, num_classes))

    def sample_rows(class_ids):
        feats = []
        labels = []
        for cid in class_ids:
            noise = rng.standard_normal((spec.samples_per_class, spec.feature_dim))
            feats.append(centroids[cid] + spec.noise_sigma * noise)
            labels.append(np.full(spec.samples_per_class, cid, dtype=np.int64))
        return np.concatenate(feats), np.concatenate(labels)

    train_x, train_y = sample_rows(seen)
    test_x, test_y = sample_rows(unseen)
    train = ZslDataset(train_x, train_y, attrs, seen, unseen)
    test = ZslDataset(test_x, test_y, attrs, seen, unseen)
    return train, test, centroids


# ---------------------------------------------------------------------------
# checkpoints: named matrices in one file


def write_named_matrices(path, entries) -> None:
    """entries is an ordered list of (name, matrix) pairs."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(entries))]
    for name, m in entries:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise InputError(f"entry name too long: {name!r}")
        m = np.asarray(m, dtype=np.float64)
        if m.ndim == 1:
            m = m.reshape(1, -1)
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        rows, cols = m.shape
        chunks.append(MATRIX_MAGIC + struct.pack("<II", rows, cols) + m.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_named_matrices(path):
    """Returns an ordered dict of name -> float64 matrix."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path.name}: bad magic, expected {CHECKPOINT_MAGIC!r}", offset=0)
    if len(data) < 12:
        raise FormatError(f"{path.name}: truncated header", offset=len(data))
    version, count = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"{path.name}: unsupported version {version}", offset=4)
    pos = 12
    entries = {}
    for _ in range(count):
        if pos + 2 > len(data):
            raise FormatError(f"{path.name}: truncated entry header", offset=pos)
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + name_len > len(data):
            raise FormatError(f"{path.name}: truncated entry name", offset=pos)
        name = data[pos:pos + name_len].decode("utf-8")
        pos += name_len
        if pos + 12 > len(data) or data[pos:pos + 4] != MATRIX_MAGIC:
            raise FormatError(f"{path.name}: entry {name!r} lacks a matrix header", offset=pos)
        rows, cols = struct.unpack_from("<II", data, pos + 4)
        body = 12 + 4 * rows * cols
        if pos + body > len(data):
            raise FormatError(f"{path.name}: entry {name!r} truncated", offset=len(data))
        entries[name] = _decode_binary_matrix(data[pos:pos + body], name)
        pos += body
    if pos != len(data):
        raise FormatError(f"{path.name}: {len(data) - pos} trailing bytes", offset=pos)
    return entries


def save_checkpoint(model, path) -> None:
    """Write a trained model (CVAE or linear classifier) to one file.

    Weights are stored as float32; loading widens back to float64, so a
    loaded model reproduces the original only to float32 precision.
    """
    from .cvae import CvaeModel
    from .svm import SvmModel

    if isinstance(model, CvaeModel):
        entries = model.to_matrices()
    elif isinstance(model, SvmModel):
        entries = model.to_matrices()
    else:
        raise InputError(f"cannot checkpoint a {type(model).__name__}")
    write_named_matrices(path, entries)


def load_checkpoint(path):
    """Read back a model written by save_checkpoint; type is self-describing."""
    from .cvae import CvaeModel
    from .svm import SvmModel

    entries = read_named_matrices(path)
    if "cvae.config" in entries:
        return CvaeModel.from_matrices(entries)
    if "svm.classes" in entries:
        return SvmModel.from_matrices(entries)
    raise FormatError(f"{Path(path).name}: unrecognized checkpoint contents")
