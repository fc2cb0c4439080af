"""Command line interface: synth, train, eval, and pipeline.

Every setting can come from defaults, a config file of `key = value`
lines, or a flag, in that order of precedence. One seed drives all
randomness, so a command repeated with the same inputs and seed
reproduces its outputs byte for byte.

Exit codes: 0 ok, 2 bad configuration or input, 3 malformed data file,
4 training diverged.
"""

import argparse
import csv
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cvae import CvaeConfig, CvaeModel, train_cvae
from .data import (
    SynthSpec,
    ZslDataset,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
    save_matrix,
    standardize_dataset,
    synth_generate,
)
from .errors import (
    ConfigError,
    DataError,
    FormatError,
    InputError,
    TrainingDivergedError,
)
from .evaluation import run_disjoint_zsl, run_generalized_zsl, stratified_holdout
from .svm import SvmConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

# filenames written by `synth --out-dir` and assumed by `--data-dir`
DATA_FILENAMES = {
    "features": "features.bin",
    "labels": "labels.txt",
    "attributes": "attributes.bin",
    "split": "split.txt",
}
CENTROIDS_FILENAME = "centroids.bin"

_PATH_FIELDS = frozenset({"features", "labels", "attributes", "split", "checkpoint",
                          "report", "trace", "data_dir", "out_dir"})


@dataclass
class RunConfig:
    """Every tunable of the toolchain plus the file paths, with defaults."""

    # synthetic benchmark
    num_seen: int = 15
    num_unseen: int = 5
    attr_dim: int = 10
    feature_dim: int = 50
    samples_per_class: int = 200
    noise_sigma: float = 0.1
    # generator network and training
    latent_dim: int = 100
    enc_hidden1: int = 1024
    enc_hidden2: int = 1024
    dec_hidden: int = 1024
    dropout_rate: float = 0.3
    batch_size: int = 50
    epochs: int = 50
    lr: float = 1e-3
    # classifier
    svm_cost: float = 100.0
    svm_max_epochs: int = 1000
    svm_tol: float = 1e-6
    # protocol
    protocol: str = "disjoint"
    n_pseudo: int = 300
    holdout_frac: float = 0.2
    top_k: int | None = None
    standardize: bool = False
    seed: int = 1
    # paths
    features: str | None = None
    labels: str | None = None
    attributes: str | None = None
    split: str | None = None
    checkpoint: str | None = None
    report: str | None = None
    trace: str | None = None
    data_dir: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.protocol not in ("disjoint", "generalized"):
            raise ConfigError(
                f"protocol must be 'disjoint' or 'generalized', got {self.protocol!r}")

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(num_seen=self.num_seen, num_unseen=self.num_unseen,
                         attr_dim=self.attr_dim, feature_dim=self.feature_dim,
                         samples_per_class=self.samples_per_class,
                         noise_sigma=self.noise_sigma, seed=self.seed)

    def cvae_config(self, feature_dim: int, attr_dim: int) -> CvaeConfig:
        return CvaeConfig(feature_dim=feature_dim, attr_dim=attr_dim,
                          latent_dim=self.latent_dim, enc_hidden1=self.enc_hidden1,
                          enc_hidden2=self.enc_hidden2, dec_hidden=self.dec_hidden,
                          dropout_rate=self.dropout_rate, batch_size=self.batch_size,
                          epochs=self.epochs, lr=self.lr, seed=self.seed)

    def svm_config(self) -> SvmConfig:
        return SvmConfig(cost=self.svm_cost, max_epochs=self.svm_max_epochs,
                         tol=self.svm_tol)


_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _coerce(name: str, text: str):
    """Parse a config-file value into the type RunConfig expects."""
    if name in _PATH_FIELDS:
        return text or None
    if name == "top_k":
        return None if text.lower() in ("none", "") else int(text)
    default = getattr(RunConfig, name)
    if isinstance(default, bool):
        try:
            return _BOOL_WORDS[text.lower()]
        except KeyError:
            raise ConfigError(f"{name}: expected a boolean, got {text!r}") from None
    kind = type(default)
    if kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            raise ConfigError(f"{name}: expected {kind.__name__}, got {text!r}") from None
    return text


def parse_config_file(path) -> dict:
    """`key = value` lines; blank lines and # comments are skipped."""
    valid = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno} is not a `key = value` pair")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in valid:
            raise ConfigError(f"{path}: unknown setting {key!r} on line {lineno}")
        out[key] = _coerce(key, value.strip())
    return out


def build_run_config(args):
    """Merge defaults < config file < flags; returns (config, provided names)."""
    values = dataclasses.asdict(RunConfig())
    provided = set()
    if getattr(args, "config", None):
        file_values = parse_config_file(args.config)
        values.update(file_values)
        provided.update(file_values)
    for name in values:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
            provided.add(name)
    return RunConfig(**values), provided


def _add_knob_flags(parser, names):
    defaults = {f.name: f.default for f in dataclasses.fields(RunConfig)}
    for name in names:
        flag = "--" + name.replace("_", "-")
        if name == "standardize":
            parser.add_argument(flag, default=None, action=argparse.BooleanOptionalAction,
                                help="z-score features using seen-class statistics")
        elif name == "top_k":
            parser.add_argument(flag, default=None, type=int,
                                help="also report top-k accuracy")
        elif name == "protocol":
            parser.add_argument(flag, default=None, choices=("disjoint", "generalized"),
                                help="evaluation protocol (default disjoint)")
        else:
            parser.add_argument(flag, default=None, type=type(defaults[name]),
                                help=f"default {defaults[name]}")


_SYNTH_KNOBS = ("num_seen", "num_unseen", "attr_dim", "feature_dim",
                "samples_per_class", "noise_sigma")
_CVAE_KNOBS = ("latent_dim", "enc_hidden1", "enc_hidden2", "dec_hidden",
               "dropout_rate", "batch_size", "epochs", "lr")
_SVM_KNOBS = ("svm_cost", "svm_max_epochs", "svm_tol")
_PROTO_KNOBS = ("protocol", "n_pseudo", "holdout_frac", "top_k", "standardize")


def _add_data_flags(parser):
    parser.add_argument("--data-dir", default=None,
                        help="directory holding " + ", ".join(DATA_FILENAMES.values()))
    for key in DATA_FILENAMES:
        parser.add_argument(f"--{key}", default=None, help=f"path to the {key} file")


def _resolve_data_paths(cfg: RunConfig, required: bool):
    """Fill missing paths from data_dir; None when no data location given."""
    given = {key: getattr(cfg, key) for key in DATA_FILENAMES}
    if cfg.data_dir is None and not any(given.values()):
        if required:
            raise ConfigError("missing data files: give --data-dir or --features, "
                              "--labels, --attributes, --split")
        return None
    paths = {}
    missing = []
    for key, fname in DATA_FILENAMES.items():
        value = given[key]
        if value is None and cfg.data_dir:
            value = str(Path(cfg.data_dir) / fname)
        if value is None:
            missing.append(f"--{key}")
        paths[key] = value
    if missing:
        raise ConfigError("missing data files: " + ", ".join(missing))
    return paths


def _require(cfg: RunConfig, field: str, command: str) -> str:
    value = getattr(cfg, field)
    if value is None:
        raise ConfigError(f"{command} needs --{field.replace('_', '-')}")
    return value


def _load_cli_dataset(paths, cfg: RunConfig) -> ZslDataset:
    ds = load_dataset(paths["features"], paths["labels"], paths["attributes"], paths["split"])
    if cfg.standardize:
        ds = standardize_dataset(ds)
    return ds


def _synth_union(cfg: RunConfig):
    """Synthetic benchmark as one dataset carrying both splits' rows."""
    train, test, centroids = synth_generate(cfg.synth_spec())
    union = ZslDataset(np.concatenate([train.features, test.features]),
                       np.concatenate([train.labels, test.labels]),
                       train.attributes, train.seen_classes, train.unseen_classes)
    return union, centroids


def _write_trace(path, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "total", "reconstr", "kl", "seconds"])
        for i in range(trace.epochs):
            writer.writerow([i + 1, repr(trace.total[i]), repr(trace.reconstr[i]),
                             repr(trace.kl[i]), repr(trace.seconds[i])])


def _run_protocol(cfg: RunConfig, dataset: ZslDataset, model: CvaeModel | None = None):
    cvae_cfg = cfg.cvae_config(dataset.feature_dim, dataset.attr_dim)
    if cfg.protocol == "disjoint":
        return run_disjoint_zsl(dataset, cvae_cfg, cfg.svm_config(),
                                n_pseudo=cfg.n_pseudo, top_k=cfg.top_k, model=model)
    return run_generalized_zsl(dataset, cvae_cfg, cfg.svm_config(),
                               n_pseudo=cfg.n_pseudo, holdout_frac=cfg.holdout_frac,
                               top_k=cfg.top_k, model=model)


def _headline(report) -> str:
    if report.protocol == "disjoint":
        return f"per_class_acc {report.per_class_acc:.4f}"
    return (f"harmonic_mean {report.harmonic_mean:.4f} "
            f"(seen {report.seen_acc:.4f}, unseen {report.unseen_acc:.4f})")


def _emit_report(report, path) -> None:
    Path(path).write_bytes(report.to_json_bytes())
    print(f"wrote {path}")
    print(_headline(report))


def cmd_synth(args) -> int:
    cfg, _ = build_run_config(args)
    out_dir = Path(_require(cfg, "out_dir", "synth"))
    out_dir.mkdir(parents=True, exist_ok=True)
    union, centroids = _synth_union(cfg)
    save_dataset(union, out_dir / DATA_FILENAMES["features"],
                 out_dir / DATA_FILENAMES["labels"],
                 out_dir / DATA_FILENAMES["attributes"],
                 out_dir / DATA_FILENAMES["split"])
    save_matrix(out_dir / CENTROIDS_FILENAME, centroids)
    print(f"wrote {out_dir} ({union.n} rows, {union.num_classes} classes, "
          f"{len(union.seen_classes)} seen / {len(union.unseen_classes)} unseen)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg, provided = build_run_config(args)
    checkpoint = _require(cfg, "checkpoint", "train")
    paths = _resolve_data_paths(cfg, required=True)
    dataset = _load_cli_dataset(paths, cfg)
    train_rows = dataset.rows_for_classes(dataset.seen_classes)
    if "holdout_frac" in provided and cfg.holdout_frac > 0.0:
        train_rows, _ = stratified_holdout(train_rows, cfg.holdout_frac, cfg.seed)
    cvae_cfg = cfg.cvae_config(dataset.feature_dim, dataset.attr_dim)
    model, trace = train_cvae(train_rows, cvae_cfg)
    save_checkpoint(model, checkpoint)
    print(f"wrote {checkpoint}")
    if cfg.trace:
        _write_trace(cfg.trace, trace)
        print(f"wrote {cfg.trace}")
    if trace.epochs:
        print(f"final loss {trace.total[-1]:.4f} "
              f"(reconstr {trace.reconstr[-1]:.4f}, kl {trace.kl[-1]:.4f})")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg, _ = build_run_config(args)
    report_path = _require(cfg, "report", "eval")
    paths = _resolve_data_paths(cfg, required=True)
    dataset = _load_cli_dataset(paths, cfg)
    model = None
    if cfg.checkpoint:
        model = load_checkpoint(cfg.checkpoint)
        if not isinstance(model, CvaeModel):
            raise InputError(f"{cfg.checkpoint} does not hold a generator checkpoint")
    report = _run_protocol(cfg, dataset, model=model)
    _emit_report(report, report_path)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg, _ = build_run_config(args)
    report_path = _require(cfg, "report", "pipeline")
    paths = _resolve_data_paths(cfg, required=False)
    if paths is None:
        dataset, _ = _synth_union(cfg)
        if cfg.standardize:
            dataset = standardize_dataset(dataset)
    else:
        dataset = _load_cli_dataset(paths, cfg)
    report = _run_protocol(cfg, dataset)
    if cfg.checkpoint:
        save_checkpoint(report.artifacts["model"], cfg.checkpoint)
        print(f"wrote {cfg.checkpoint}")
    if cfg.trace and report.artifacts["trace"] is not None:
        _write_trace(cfg.trace, report.artifacts["trace"])
        print(f"wrote {cfg.trace}")
    _emit_report(report, report_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zslgen",
        description="Zero-shot feature classification via generated pseudo training data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="config file of `key = value` lines")
        p.add_argument("--seed", default=None, type=int, help="master seed for all randomness")

    p = sub.add_parser("synth", help="write a synthetic benchmark to a directory")
    add_common(p)
    p.add_argument("--out-dir", default=None, help="output directory")
    _add_knob_flags(p, _SYNTH_KNOBS)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the generator on seen-class rows")
    add_common(p)
    _add_data_flags(p)
    p.add_argument("--checkpoint", default=None, help="model output path")
    p.add_argument("--trace", default=None, help="per-epoch loss CSV output path")
    p.add_argument("--holdout-frac", default=None, type=float,
                   help="hold out this stratified fraction of each seen class before "
                        "training, so the checkpoint suits a later generalized "
                        "evaluation with the same seed")
    p.add_argument("--standardize", default=None, action=argparse.BooleanOptionalAction,
                   help="z-score features using seen-class statistics")
    _add_knob_flags(p, _CVAE_KNOBS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run an evaluation protocol and write a JSON report")
    add_common(p)
    _add_data_flags(p)
    p.add_argument("--report", default=None, help="JSON report output path")
    p.add_argument("--checkpoint", default=None,
                   help="reuse a trained generator instead of training here (for the "
                        "generalized protocol it must come from `train --holdout-frac` "
                        "with the same seed)")
    _add_knob_flags(p, _PROTO_KNOBS + _CVAE_KNOBS + _SVM_KNOBS)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="end to end: data (files or synthetic), train, "
                                        "generate, fit, evaluate")
    add_common(p)
    _add_data_flags(p)
    p.add_argument("--report", default=None, help="JSON report output path")
    p.add_argument("--checkpoint", default=None, help="also save the trained generator")
    p.add_argument("--trace", default=None, help="also save the per-epoch loss CSV")
    _add_knob_flags(p, _SYNTH_KNOBS + _PROTO_KNOBS + _CVAE_KNOBS + _SVM_KNOBS)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, DataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, InputError) as err:
        stage = getattr(err, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"error{where}: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
