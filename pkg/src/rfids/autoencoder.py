"""Feedforward autoencoder in plain numpy: forward pass, MSE, backprop, SGD-momentum and Adam training."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, TrainingError

log = logging.getLogger(__name__)

MODEL_FORMAT = "rfids-autoencoder"
MODEL_VERSION = 1


def softplus(x):
    return np.logaddexp(0.0, x)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def softplus_grad(x):
    return sigmoid(x)


def sigmoid_grad(x):
    s = sigmoid(x)
    return s * (1.0 - s)


def _identity(x):
    return x


def _ones(x):
    return np.ones_like(x)


ACTIVATIONS = {
    "softplus": (softplus, softplus_grad),
    "sigmoid": (sigmoid, sigmoid_grad),
    "linear": (_identity, _ones),
}


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple[int, ...] = (80, 70, 60, 70, 80)
    activation: str = "softplus"
    output_activation: str = "linear"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3 or any(s < 1 for s in sizes):
            raise ValueError("need input, output and at least one hidden layer of positive size")
        if sizes[0] != sizes[-1]:
            raise ValueError("input and output sizes differ")
        hidden = sizes[1:-1]
        if len(hidden) % 2 == 0:
            raise ValueError("an autoencoder needs an odd number of hidden layers")
        mid = len(sizes) // 2
        if any(s <= sizes[mid] for i, s in enumerate(sizes) if i != mid):
            raise ValueError("the middle layer must be the strictly smallest (bottleneck)")
        if self.activation not in ("softplus", "sigmoid"):
            raise ValueError(f"hidden activation must be softplus or sigmoid, not {self.activation!r}")
        if self.output_activation not in ("linear", "sigmoid"):
            raise ValueError(f"output activation must be linear or sigmoid, not {self.output_activation!r}")

    @classmethod
    def from_fractions(cls, n_inputs: int = 80, fractions=(0.875, 0.75, 0.875), **kw) -> "Architecture":
        return cls((n_inputs, *(int(round(f * n_inputs)) for f in fractions), n_inputs), **kw)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def bottleneck(self) -> int:
        return self.layer_sizes[len(self.layer_sizes) // 2]


@dataclass
class ModelParams:
    arch: Architecture
    weights: list  # weights[k] has shape (sizes[k], sizes[k + 1])
    biases: list
    metadata: dict = field(default_factory=dict)
    velocity: list | None = None  # optimizer state, kept so training can resume

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                           json.loads(json.dumps(self.metadata)),
                           None if self.velocity is None else [v.copy() for v in self.velocity])


def init_params(arch: Architecture, seed: int = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for n_in, n_out in zip(sizes, sizes[1:]):
        lim = math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-lim, lim, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return ModelParams(arch, weights, biases, {"seed": seed, "epochs_run": 0})


def _check_input(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.arch.n_inputs:
        raise ValueError(f"input has {x.shape[-1]} components, model expects {params.arch.n_inputs}")
    return x


def _forward_cache(params: ModelParams, x: np.ndarray):
    act, _ = ACTIVATIONS[params.arch.activation]
    out_act, _ = ACTIVATIONS[params.arch.output_activation]
    a = x
    pre, post = [], [a]
    last = len(params.weights) - 1
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ W + b
        a = out_act(z) if k == last else act(z)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(params: ModelParams, x) -> np.ndarray:
    """Reconstruction of ``x`` (a vector or a batch of row vectors)."""
    x = _check_input(params, x)
    return _forward_cache(params, np.atleast_2d(x))[1][-1].reshape(x.shape)


def loss(params: ModelParams, batch) -> float:
    """Mean over the batch of the per-vector mean squared reconstruction error."""
    x = np.atleast_2d(_check_input(params, batch))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    d = forward(params, x) - x
    return float(np.mean(d * d))


def per_sample_error(params: ModelParams, batch) -> np.ndarray:
    x = np.atleast_2d(_check_input(params, batch))
    d = forward(params, x) - x
    return np.mean(d * d, axis=1)


def reconstruction_error(params: ModelParams, x) -> np.ndarray:
    """Signed ``output - input`` per component."""
    x = _check_input(params, x)
    return forward(params, x) - x


def gradient(params: ModelParams, batch) -> tuple[list, list]:
    """Exact gradient of :func:`loss` with respect to every weight and bias."""
    x = np.atleast_2d(_check_input(params, batch))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    pre, post = _forward_cache(params, x)
    _, dact = ACTIVATIONS[params.arch.activation]
    _, dout = ACTIVATIONS[params.arch.output_activation]
    delta = 2.0 * (post[-1] - x) / x.size * dout(pre[-1])
    n = len(params.weights)
    gw, gb = [None] * n, [None] * n
    for k in range(n - 1, -1, -1):
        gw[k] = post[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ params.weights[k].T) * dact(pre[k - 1])
    return gw, gb


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    min_improvement: float = 1e-7
    loss_threshold: float | None = None
    fit_ratio: float | None = None
    seed: int = 0
    optimizer: str = "sgd"
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.fit_ratio is not None and not 0 < self.fit_ratio < 1:
            raise ValueError("fit_ratio must lie in (0, 1)")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', not {self.optimizer!r}")


def train(data, arch: Architecture, cfg: TrainingConfig, init: ModelParams | None = None,
          max_epochs: int | None = None) -> ModelParams:
    """Minibatch training (SGD with momentum, or Adam) on the reconstruction MSE.

    Stops after ``max_epochs``, after ``patience`` epochs without an
    improvement of ``min_improvement``, when the loss reaches
    ``loss_threshold``, or when it reaches ``fit_ratio`` times the largest
    per-sample error of the initial model.

    ``init`` resumes a previous run (weights, velocity, epoch counter and loss
    history); the result is then identical to an uninterrupted run. Epoch
    ``e`` shuffles with ``default_rng([seed, e])``.
    """
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("training data is empty")
    if x.shape[1] != arch.n_inputs:
        raise ValueError(f"data has {x.shape[1]} features, architecture expects {arch.n_inputs}")
    if init is None:
        params = init_params(arch, cfg.seed)
        e0 = per_sample_error(params, x)
        params.metadata.update(epochs_run=0, initial_loss=float(e0.mean()), initial_max_error=float(e0.max()),
                               history=[], stale_epochs=0)
    else:
        params = init.copy()
        if params.arch != arch:
            raise ValueError("resume architecture differs")
    n_slots = 2 * (len(params.weights) + len(params.biases)) if cfg.optimizer == "adam" else len(params.weights) + len(params.biases)
    if params.velocity is None:
        shapes = [w.shape for w in params.weights] + [b.shape for b in params.biases]
        params.velocity = [np.zeros(s) for s in shapes] * (n_slots // len(shapes))
        params.velocity = [v.copy() for v in params.velocity]
    if len(params.velocity) != n_slots:
        raise ValueError("optimizer state does not match the configured optimizer")
    step = params.metadata.get("steps", 0)
    meta = params.metadata
    meta["seed"] = cfg.seed
    history = meta.setdefault("history", [])
    best = min(history) if history else meta["initial_loss"]
    stale = meta.get("stale_epochs", 0)
    n_w = len(params.weights)
    lr, mu, bs = cfg.learning_rate, cfg.momentum, cfg.batch_size
    stop = cfg.max_epochs if max_epochs is None else min(cfg.max_epochs, max_epochs)
    epoch = meta["epochs_run"]
    while epoch < stop and not meta.get("converged", False):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(x.shape[0])
        for i in range(0, x.shape[0], bs):
            gw, gb = gradient(params, x[order[i:i + bs]])
            step += 1
            grads = gw + gb
            if cfg.optimizer == "sgd":
                for k, g in enumerate(grads):
                    v = params.velocity[k]
                    v *= mu
                    v -= lr * g
                    target = params.weights[k] if k < n_w else params.biases[k - n_w]
                    target += v
            else:
                n_g = len(grads)
                c1 = 1.0 - mu ** step
                c2 = 1.0 - cfg.beta2 ** step
                for k, g in enumerate(grads):
                    m, v = params.velocity[k], params.velocity[n_g + k]
                    m *= mu
                    m += (1.0 - mu) * g
                    v *= cfg.beta2
                    v += (1.0 - cfg.beta2) * g * g
                    target = params.weights[k] if k < n_w else params.biases[k - n_w]
                    target -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        meta["steps"] = step
        epoch += 1
        current = loss(params, x)
        if not math.isfinite(current):
            raise TrainingError("loss became non-finite", epoch)
        history.append(current)
        meta["epochs_run"] = epoch
        meta["final_loss"] = current
        if best - current < cfg.min_improvement:
            stale += 1
        else:
            stale = 0
        best = min(best, current)
        meta["stale_epochs"] = stale
        fitted = cfg.fit_ratio is not None and current <= cfg.fit_ratio * meta.get("initial_max_error", 0.0)
        if stale >= cfg.patience or fitted or (cfg.loss_threshold is not None and current <= cfg.loss_threshold):
            meta["converged"] = True
        log.debug("epoch %d loss %.3e", epoch, current)
    meta.setdefault("final_loss", meta["initial_loss"])
    return params


# -- persistence -----------------------------------------------------------------

def model_to_dict(params: ModelParams, include_optimizer: bool = True) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "architecture": {
            "layer_sizes": list(params.arch.layer_sizes),
            "activation": params.arch.activation,
            "output_activation": params.arch.output_activation,
        },
        "layers": [
            {"shape": list(W.shape), "weights": W.ravel(order="C").tolist(), "biases": b.tolist()}
            for W, b in zip(params.weights, params.biases)
        ],
        "metadata": params.metadata,
    }
    if include_optimizer and params.velocity is not None:
        doc["velocity"] = [v.ravel().tolist() for v in params.velocity]
    return doc


def model_from_dict(doc: dict) -> ModelParams:
    try:
        if doc.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a {MODEL_FORMAT} document")
        if doc.get("version") != MODEL_VERSION:
            raise FormatError(f"unsupported model version {doc.get('version')}")
        a = doc["architecture"]
        arch = Architecture(tuple(a["layer_sizes"]), a["activation"], a["output_activation"])
        weights, biases = [], []
        for layer, n_in, n_out in zip(doc["layers"], arch.layer_sizes, arch.layer_sizes[1:]):
            W = np.array(layer["weights"], dtype=np.float64)
            b = np.array(layer["biases"], dtype=np.float64)
            if W.size != n_in * n_out or b.shape != (n_out,):
                raise FormatError("layer dimensions do not chain")
            weights.append(W.reshape(n_in, n_out))
            biases.append(b)
        if len(weights) != len(arch.layer_sizes) - 1:
            raise FormatError("layer count does not match architecture")
        velocity = None
        if "velocity" in doc:
            shapes = [w.shape for w in weights] + [b.shape for b in biases]
            slots = len(doc["velocity"]) // len(shapes)  # 1 for SGD momentum, 2 for Adam
            if slots not in (1, 2) or len(doc["velocity"]) != slots * len(shapes):
                raise FormatError("optimizer state does not match the layers")
            velocity = [np.array(v, dtype=np.float64).reshape(s) for v, s in zip(doc["velocity"], shapes * slots)]
        return ModelParams(arch, weights, biases, doc.get("metadata", {}), velocity)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed model document: {exc}") from exc


def save_model(params: ModelParams, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(params), fh)


def load_model(path) -> ModelParams:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"model document is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def with_activation(arch: Architecture, activation: str) -> Architecture:
    return replace(arch, activation=activation)
