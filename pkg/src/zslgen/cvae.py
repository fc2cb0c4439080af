"""Conditional VAE over feature vectors.

The encoder sees a feature vector concatenated with its class attribute
vector and outputs the mean and log-variance of a diagonal Gaussian over
the latent code; the decoder maps a latent sample concatenated with the
attribute vector back to feature space. Training minimizes squared
reconstruction error plus the closed-form KL divergence to a standard
normal prior (unit weight on both), with Adam on every parameter.

Once trained, feature vectors for any class with a known attribute
vector, including classes never observed in training, are drawn by
decoding standard-normal latents. That synthetic data is what the
downstream classifier trains on.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import ZslDataset
from .errors import ConfigError, InputError, ShapeError, TrainingDivergedError
from .nn import Mlp, feedforward
from .numerics import AdamState, Matrix, Rng, adam_step, make_rng, sample_standard_normal


@dataclass(frozen=True)
class CvaeConfig:
    """Architecture and training settings.

    Widths default to a configuration that works well on CNN-style
    feature vectors (a couple thousand dims); shrink them for small
    problems. Dropout acts between the two encoder hidden layers only.
    """

    feature_dim: int
    attr_dim: int
    latent_dim: int = 100
    enc_hidden1: int = 1024
    enc_hidden2: int = 1024
    dec_hidden: int = 1024
    dropout_rate: float = 0.3
    batch_size: int = 50
    epochs: int = 50
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in ("feature_dim", "attr_dim", "latent_dim", "enc_hidden1",
                     "enc_hidden2", "dec_hidden", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.lr <= 0.0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.latent_dim > self.feature_dim:
            warnings.warn(
                f"latent_dim {self.latent_dim} exceeds feature_dim {self.feature_dim}; "
                f"the latent space is wider than the data it encodes", stacklevel=2)


class CvaeModel:
    """Encoder/decoder pair plus the config that shaped them."""

    def __init__(self, encoder: Mlp, decoder: Mlp, config: CvaeConfig):
        d, q, z = config.feature_dim, config.attr_dim, config.latent_dim
        if encoder.in_dim != d + q or encoder.out_dim != 2 * z:
            raise ConfigError(
                f"encoder must map {d + q} -> {2 * z}, got "
                f"{encoder.in_dim} -> {encoder.out_dim}")
        if decoder.in_dim != z + q or decoder.out_dim != d:
            raise ConfigError(
                f"decoder must map {z + q} -> {d}, got "
                f"{decoder.in_dim} -> {decoder.out_dim}")
        self.encoder = encoder
        self.decoder = decoder
        self.config = config

    @classmethod
    def init(cls, config: CvaeConfig, rng: Rng) -> "CvaeModel":
        """Fresh Glorot-initialized model."""
        encoder = feedforward(
            [config.feature_dim + config.attr_dim, config.enc_hidden1,
             config.enc_hidden2, 2 * config.latent_dim],
            rng, dropout_rate=config.dropout_rate, dropout_after=0)
        decoder = feedforward(
            [config.latent_dim + config.attr_dim, config.dec_hidden, config.feature_dim],
            rng)
        return cls(encoder, decoder, config)

    def to_matrices(self):
        """Named-matrix form for checkpointing, config first."""
        cfg = self.config
        header = np.asarray([[cfg.feature_dim, cfg.attr_dim, cfg.latent_dim,
                              cfg.enc_hidden1, cfg.enc_hidden2, cfg.dec_hidden,
                              cfg.dropout_rate, cfg.batch_size, cfg.epochs, cfg.lr]])
        entries = [("cvae.config", header)]
        for prefix, net in (("enc", self.encoder), ("dec", self.decoder)):
            for i, layer in enumerate(net.dense_layers()):
                entries.append((f"{prefix}.{i}.w", layer.weights))
                entries.append((f"{prefix}.{i}.b", layer.bias.reshape(1, -1)))
        return entries

    @classmethod
    def from_matrices(cls, entries) -> "CvaeModel":
        from .errors import FormatError
        from .nn import DenseLayer, DropoutLayer, ReluLayer

        header = entries.get("cvae.config")
        if header is None or header.shape != (1, 10):
            raise FormatError("checkpoint lacks a valid cvae.config entry")
        vals = header[0]
        config = CvaeConfig(
            feature_dim=int(round(vals[0])), attr_dim=int(round(vals[1])),
            latent_dim=int(round(vals[2])), enc_hidden1=int(round(vals[3])),
            enc_hidden2=int(round(vals[4])), dec_hidden=int(round(vals[5])),
            dropout_rate=float(vals[6]), batch_size=int(round(vals[7])),
            epochs=int(round(vals[8])), lr=float(vals[9]))

        def dense(name: str) -> DenseLayer:
            w = entries.get(f"{name}.w")
            b = entries.get(f"{name}.b")
            if w is None or b is None:
                raise FormatError(f"checkpoint lacks weights for layer {name!r}")
            return DenseLayer(w.shape[0], w.shape[1], weights=w, bias=b.ravel())

        enc_layers = [dense("enc.0"), ReluLayer()]
        if config.dropout_rate > 0.0:
            enc_layers.append(DropoutLayer(config.dropout_rate))
        enc_layers += [dense("enc.1"), ReluLayer(), dense("enc.2")]
        dec_layers = [dense("dec.0"), ReluLayer(), dense("dec.1")]
        return cls(Mlp(enc_layers), Mlp(dec_layers), config)


def _concat_cond(x: Matrix, attrs: Matrix, what: str) -> Matrix:
    if x.shape[0] != attrs.shape[0]:
        raise ShapeError(f"{what}: {x.shape[0]} rows but {attrs.shape[0]} attribute rows")
    return np.concatenate([x, attrs], axis=1)


def encode(model: CvaeModel, x: Matrix, attrs: Matrix,
           rng: Rng | None = None, training: bool = False):
    """Posterior parameters (mu, logvar) for each row, conditioned on attrs."""
    out = model.encoder.forward(_concat_cond(x, attrs, "encode"), rng=rng, training=training)
    z = model.config.latent_dim
    return out[:, :z], out[:, z:]


def decode(model: CvaeModel, z: Matrix, attrs: Matrix,
           rng: Rng | None = None, training: bool = False) -> Matrix:
    """Reconstruction (or generation) from latent codes and attributes."""
    return model.decoder.forward(_concat_cond(z, attrs, "decode"), rng=rng, training=training)


def reparameterize(mu: Matrix, logvar: Matrix, rng: Rng | None = None,
                   eps: Matrix | None = None) -> Matrix:
    """Differentiable sample z = mu + exp(logvar / 2) * eps, eps ~ N(0, I).

    Pass eps explicitly to fix the noise (used by training, where the
    draw must be retained for the backward pass).
    """
    if mu.shape != logvar.shape:
        raise ShapeError(f"mu {mu.shape} and logvar {logvar.shape} differ")
    if eps is None:
        if rng is None:
            raise InputError("reparameterize needs an rng when eps is not given")
        eps = sample_standard_normal(rng, mu.shape[0], mu.shape[1])
    if eps.shape != mu.shape:
        raise ShapeError(f"eps {eps.shape} does not match mu {mu.shape}")
    return mu + np.exp(0.5 * logvar) * eps


def gaussian_kl(mu: Matrix, logvar: Matrix) -> float:
    """Mean over rows of KL(N(mu, diag(exp(logvar))) || N(0, I)).

    Per row this is 0.5 * sum_j (mu_j^2 + exp(logvar_j) - logvar_j - 1),
    which is 0 exactly at mu=0, logvar=0 and positive elsewhere.
    """
    if mu.shape != logvar.shape:
        raise ShapeError(f"mu {mu.shape} and logvar {logvar.shape} differ")
    per_row = 0.5 * (mu ** 2 + np.exp(logvar) - logvar - 1.0).sum(axis=1)
    return float(per_row.mean())


def reconstruction_loss(x: Matrix, x_hat: Matrix) -> float:
    """Mean over rows of the squared euclidean distance ||x - x_hat||^2."""
    if x.shape != x_hat.shape:
        raise ShapeError(f"x {x.shape} and x_hat {x_hat.shape} differ")
    return float(((x - x_hat) ** 2).sum(axis=1).mean())


def total_loss(x: Matrix, x_hat: Matrix, mu: Matrix, logvar: Matrix):
    """(total, reconstruction, kl) with total = reconstruction + kl exactly."""
    rec = reconstruction_loss(x, x_hat)
    kl = gaussian_kl(mu, logvar)
    return rec + kl, rec, kl


@dataclass
class _ForwardState:
    """Everything the backward pass needs from one loss evaluation."""

    x: Matrix
    x_hat: Matrix
    mu: Matrix
    logvar: Matrix
    eps: Matrix


def loss_forward(model: CvaeModel, x: Matrix, attrs: Matrix, eps: Matrix,
                 rng: Rng | None = None, training: bool = False):
    """Full forward pass with a fixed noise draw.

    Returns (total, reconstruction, kl, state); feed state to
    loss_backward to populate gradients on every dense layer.
    """
    mu, logvar = encode(model, x, attrs, rng=rng, training=training)
    z = reparameterize(mu, logvar, eps=eps)
    x_hat = decode(model, z, attrs, rng=rng, training=training)
    total, rec, kl = total_loss(x, x_hat, mu, logvar)
    return total, rec, kl, _ForwardState(x, x_hat, mu, logvar, eps)


def loss_backward(model: CvaeModel, state: _ForwardState) -> None:
    """Backpropagate the total loss through decoder and encoder.

    The latent sample z = mu + exp(logvar/2) * eps routes the decoder
    gradient into both posterior heads; the KL term adds its own
    closed-form gradient. Batch-mean scaling (1/n) is applied here once.
    """
    n = state.x.shape[0]
    latent = model.config.latent_dim

    grad_x_hat = 2.0 * (state.x_hat - state.x) / n
    grad_dec_in = model.decoder.backward(grad_x_hat)
    grad_z = grad_dec_in[:, :latent]

    # d z / d mu = 1, d z / d logvar = eps * exp(logvar/2) / 2
    grad_mu = grad_z + state.mu / n
    grad_logvar = (grad_z * state.eps * 0.5 * np.exp(0.5 * state.logvar)
                   + 0.5 * (np.exp(state.logvar) - 1.0) / n)
    model.encoder.backward(np.concatenate([grad_mu, grad_logvar], axis=1))


@dataclass
class TrainTrace:
    """Per-epoch sample-weighted means of the loss terms, plus wall time."""

    total: list = field(default_factory=list)
    reconstr: list = field(default_factory=list)
    kl: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.total)


def train_cvae(dataset: ZslDataset, config: CvaeConfig):
    """Train on the rows of dataset; returns (model, trace).

    All rows must carry seen-class labels, since attribute conditioning
    during training is only honest for classes with real data. One rng
    seeded from config.seed drives init, epoch shuffles, latent noise,
    and dropout masks, in that order, so runs are exactly repeatable.
    """
    if dataset.n < 1:
        raise InputError("training needs at least one row")
    if dataset.feature_dim != config.feature_dim or dataset.attr_dim != config.attr_dim:
        raise ConfigError(
            f"config dims ({config.feature_dim}, {config.attr_dim}) do not match dataset "
            f"({dataset.feature_dim}, {dataset.attr_dim})")
    stray = set(np.unique(dataset.labels).tolist()) - set(dataset.seen_classes)
    if stray:
        raise InputError(f"training rows carry unseen-class labels: {sorted(stray)}")

    rng = make_rng(config.seed)
    model = CvaeModel.init(config, rng)
    dense = model.encoder.dense_layers() + model.decoder.dense_layers()
    slots = []
    for layer in dense:
        slots.append((layer, "weights", AdamState.for_param(layer.weights, lr=config.lr)))
        slots.append((layer, "bias", AdamState.for_param(layer.bias, lr=config.lr)))

    trace = TrainTrace()
    n = dataset.n
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n)
        sums = np.zeros(3)
        for lo in range(0, n, config.batch_size):
            batch = order[lo:lo + config.batch_size]
            x = dataset.features[batch]
            attrs = dataset.attributes[dataset.labels[batch]]
            eps = sample_standard_normal(rng, len(batch), config.latent_dim)
            total, rec, kl, state = loss_forward(model, x, attrs, eps, rng=rng, training=True)
            if not np.isfinite(total):
                raise TrainingDivergedError(epoch)
            loss_backward(model, state)
            for layer, attr, opt in slots:
                grad = layer.grad_w if attr == "weights" else layer.grad_b
                setattr(layer, attr, adam_step(opt, getattr(layer, attr), grad))
            sums += np.asarray([total, rec, kl]) * len(batch)
        trace.total.append(float(sums[0] / n))
        trace.reconstr.append(float(sums[1] / n))
        trace.kl.append(float(sums[2] / n))
        trace.seconds.append(time.perf_counter() - start)
    return model, trace


def generate_pseudo(model: CvaeModel, class_ids, attrs: Matrix, n_per_class: int,
                    rng: Rng) -> ZslDataset:
    """Decode standard-normal latents into n_per_class rows per class.

    attrs is the full (num_classes, q) table; class_ids picks the rows
    to condition on. Classes are generated in the given order from one
    rng, so the draw is reproducible. The result is labeled synthetic
    training data; its split marks every generated class as seen because
    downstream classifiers treat the rows as ordinary training samples.
    """
    if n_per_class < 1:
        raise InputError(f"n_per_class must be >= 1, got {n_per_class}")
    class_ids = [int(c) for c in class_ids]
    if not class_ids:
        raise InputError("no classes to generate")
    for cid in class_ids:
        if not 0 <= cid < attrs.shape[0]:
            raise InputError(f"unknown class id {cid} (attribute table has {attrs.shape[0]} rows)")
    if attrs.shape[1] != model.config.attr_dim:
        raise ShapeError(
            f"attribute width {attrs.shape[1]} does not match model ({model.config.attr_dim})")
    feats = []
    labels = []
    for cid in class_ids:
        z = sample_standard_normal(rng, n_per_class, model.config.latent_dim)
        cond = np.repeat(attrs[cid][None, :], n_per_class, axis=0)
        feats.append(decode(model, z, cond, training=False))
        labels.append(np.full(n_per_class, cid, dtype=np.int64))
    return ZslDataset(np.concatenate(feats), np.concatenate(labels), attrs,
                      tuple(sorted(set(class_ids))), ())
