"""Dense feedforward autoencoders: forward, backprop, Adam, batch norm.

Everything is float64 numpy and deterministic per seed: weight init,
shuffling, and the update order are all driven by explicit generators,
so two runs with the same seed produce bitwise-identical parameters.

Conventions fixed here (the usual formulations leave them open):
* MSE averages over samples and coordinates.
* Batch norm sits between the linear map and the activation, normalizes
  per feature with batch statistics while training (biased variance) and
  running averages in eval mode (momentum 0.1, unbiased running
  variance, eps 1e-5).
* The latent layer and the final output layer are linear without batch
  norm.
* Weight init is uniform +-1/sqrt(fan_in) for weights and biases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .activations import ACTIVATIONS, activation, activation_grad
from .pointcloud import PointCloud

__all__ = [
    "LayerSpec",
    "AutoencoderModel",
    "TrainConfig",
    "LossTerm",
    "build_autoencoder",
    "forward",
    "mse_loss",
    "mse_term",
    "backward_and_step",
    "train",
    "save_model",
    "load_model",
    "decoder_outputs",
]

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "linear"
    batch_norm: bool = False

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dims must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class _Layer:
    """One dense layer with optional batch norm and activation."""

    def __init__(self, spec: LayerSpec, rng: np.random.Generator):
        self.spec = spec
        bound = 1.0 / math.sqrt(spec.in_dim)
        self.weight = rng.uniform(-bound, bound, (spec.out_dim, spec.in_dim))
        self.bias = rng.uniform(-bound, bound, spec.out_dim)
        if spec.batch_norm:
            self.gamma = np.ones(spec.out_dim)
            self.beta = np.zeros(spec.out_dim)
            self.running_mean = np.zeros(spec.out_dim)
            self.running_var = np.ones(spec.out_dim)
        self._act = activation(spec.activation)
        self._act_grad = activation_grad(spec.activation)
        self._cache: Optional[dict] = None

    # --- parameter plumbing (order matters for Adam state) ---

    def parameters(self) -> List[np.ndarray]:
        params = [self.weight, self.bias]
        if self.spec.batch_norm:
            params += [self.gamma, self.beta]
        return params

    def gradients(self) -> List[np.ndarray]:
        grads = [self._dw, self._db]
        if self.spec.batch_norm:
            grads += [self._dgamma, self._dbeta]
        return grads

    # --- forward / backward ---

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        z = x @ self.weight.T + self.bias
        if self.spec.batch_norm:
            if training:
                mu = z.mean(axis=0)
                var = z.var(axis=0)  # biased, used for normalization
                n = z.shape[0]
                unbiased = var * (n / (n - 1)) if n > 1 else var
                self.running_mean = (
                    (1.0 - BN_MOMENTUM) * self.running_mean + BN_MOMENTUM * mu
                )
                self.running_var = (
                    (1.0 - BN_MOMENTUM) * self.running_var + BN_MOMENTUM * unbiased
                )
            else:
                mu, var = self.running_mean, self.running_var
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mu) * inv_std
            pre = self.gamma * xhat + self.beta
        else:
            xhat, inv_std, pre = None, None, z
        out = self._act(pre)
        if training:
            self._cache = {"x": x, "z": z, "xhat": xhat, "inv_std": inv_std, "pre": pre}
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        cache = self._cache
        if cache is None:
            raise RuntimeError("backward before forward(training=True)")
        dpre = dout * self._act_grad(cache["pre"])
        if self.spec.batch_norm:
            xhat, inv_std = cache["xhat"], cache["inv_std"]
            n = dpre.shape[0]
            self._dgamma = (dpre * xhat).sum(axis=0)
            self._dbeta = dpre.sum(axis=0)
            dxhat = dpre * self.gamma
            # batch statistics couple every sample in the batch
            dz = (
                inv_std
                / n
                * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
            )
        else:
            dz = dpre
        self._dw = dz.T @ cache["x"]
        self._db = dz.sum(axis=0)
        return dz @ self.weight


class AutoencoderModel:
    """Encoder/decoder stack of dense layers around a low-dim latent."""

    def __init__(
        self,
        encoder_specs: Sequence[LayerSpec],
        decoder_specs: Sequence[LayerSpec],
        seed: int,
    ):
        if not encoder_specs or not decoder_specs:
            raise ValueError("need at least one encoder and one decoder layer")
        for a, b in zip(encoder_specs, encoder_specs[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("encoder layer dims do not chain")
        for a, b in zip(decoder_specs, decoder_specs[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("decoder layer dims do not chain")
        latent = encoder_specs[-1].out_dim
        if decoder_specs[0].in_dim != latent:
            raise ValueError("decoder input dim must equal latent dim")
        if decoder_specs[-1].out_dim != encoder_specs[0].in_dim:
            raise ValueError("autoencoder must preserve the input dim end to end")
        if latent >= encoder_specs[0].in_dim:
            raise ValueError("latent dim must be smaller than the input dim")
        self.encoder_specs = tuple(encoder_specs)
        self.decoder_specs = tuple(decoder_specs)
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        self.encoder = [_Layer(s, rng) for s in encoder_specs]
        self.decoder = [_Layer(s, rng) for s in decoder_specs]

    @property
    def layers(self) -> List[_Layer]:
        return self.encoder + self.decoder

    @property
    def input_dim(self) -> int:
        return self.encoder_specs[0].in_dim

    @property
    def latent_dim(self) -> int:
        return self.encoder_specs[-1].out_dim

    def parameters(self) -> List[np.ndarray]:
        return [p for layer in self.layers for p in layer.parameters()]


def build_autoencoder(
    arch: Sequence[int],
    activation_name: str = "relu",
    batch_norm: bool = False,
    seed: int = 0,
    latent_index: Optional[int] = None,
) -> AutoencoderModel:
    """Model from a dim chain like (3, 32, 32, 2, 32, 32, 3).

    The latent sits at latent_index (default: the smallest interior
    entry).  Hidden layers get the activation and optional batch norm;
    the layer into the latent and the final layer stay linear.
    """
    dims = [int(d) for d in arch]
    if len(dims) < 3:
        raise ValueError("need at least input, latent, output dims")
    if latent_index is None:
        interior = dims[1:-1]
        latent_index = 1 + interior.index(min(interior))
    if not 0 < latent_index < len(dims) - 1:
        raise ValueError("latent index must be interior")

    def make(specs_dims: List[int], final_linear_idx: int) -> List[LayerSpec]:
        specs = []
        for k in range(len(specs_dims) - 1):
            last = k == final_linear_idx
            specs.append(
                LayerSpec(
                    specs_dims[k],
                    specs_dims[k + 1],
                    "linear" if last else activation_name,
                    batch_norm=batch_norm and not last,
                )
            )
        return specs

    enc_dims = dims[: latent_index + 1]
    dec_dims = dims[latent_index:]
    encoder = make(enc_dims, len(enc_dims) - 2)
    decoder = make(dec_dims, len(dec_dims) - 2)
    return AutoencoderModel(encoder, decoder, seed)


def forward(
    model: AutoencoderModel, batch: np.ndarray, training: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """(latent, output) for a batch of shape (n, input_dim)."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"batch shape {x.shape} does not match input dim {model.input_dim}")
    h = x
    for layer in model.encoder:
        h = layer.forward(h, training)
    latent = h
    for layer in model.decoder:
        h = layer.forward(h, training)
    return latent, h


def mse_loss(output: np.ndarray, target: np.ndarray) -> float:
    output = np.asarray(output, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if output.shape != target.shape:
        raise ValueError(f"shape mismatch {output.shape} vs {target.shape}")
    return float(np.mean((output - target) ** 2))


@dataclass(frozen=True)
class LossTerm:
    """One additive objective term.

    fn(batch, latent, output) returns (value, d_latent, d_output); the
    gradient arrays may be None when the term does not touch that node.
    Terms with weight 0 or before active_from_epoch are skipped entirely,
    so a weight-0 topology term cannot perturb a vanilla run.
    """

    name: str
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray], Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]]
    weight: float = 1.0
    active_from_epoch: int = 0


def mse_term(weight: float = 1.0) -> LossTerm:
    def fn(batch, latent, output):
        n = output.size
        return mse_loss(output, batch), None, 2.0 * (output - batch) / n

    return LossTerm("mse", fn, weight)


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_schedule: Optional[Sequence[Tuple[Tuple[int, int], float]]] = None

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("bad epochs/batch_size")
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise ValueError("rates must be nonnegative")
        if self.lr_schedule is not None:
            ranges = [tuple(r) for r, _ in self.lr_schedule]
            for (a, b) in ranges:
                if a > b:
                    raise ValueError(f"bad schedule range {(a, b)}")
            for (_, b), (c, _) in zip(ranges, ranges[1:]):
                if c <= b:
                    raise ValueError("schedule ranges must be disjoint and ordered")

    def lr_at(self, epoch: int) -> float:
        if self.lr_schedule:
            for (a, b), lr in self.lr_schedule:
                if a <= epoch <= b:
                    return lr
        return self.learning_rate


class _Adam:
    def __init__(self, params: List[np.ndarray], config: TrainConfig):
        self.config = config
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: List[np.ndarray], grads: List[np.ndarray], lr: float) -> None:
        c = self.config
        self.t += 1
        b1t = 1.0 - c.beta1**self.t
        b2t = 1.0 - c.beta2**self.t
        for i, (p, g) in enumerate(zip(params, grads)):
            if c.weight_decay:
                g = g + c.weight_decay * p
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g
            mhat = self.m[i] / b1t
            vhat = self.v[i] / b2t
            p -= lr * mhat / (np.sqrt(vhat) + c.adam_eps)


def _active_terms(terms: Sequence[LossTerm], epoch: int) -> List[LossTerm]:
    return [t for t in terms if t.weight != 0.0 and epoch >= t.active_from_epoch]


def backward_and_step(
    model: AutoencoderModel,
    batch: np.ndarray,
    terms: Sequence[LossTerm],
    optimizer: _Adam,
    lr: float,
) -> Dict[str, float]:
    """One training step: forward, accumulate weighted gradients, Adam."""
    latent, output = forward(model, batch, training=True)
    d_latent = np.zeros_like(latent)
    d_output = np.zeros_like(output)
    values: Dict[str, float] = {}
    for term in terms:
        value, gl, go = term.fn(batch, latent, output)
        values[term.name] = float(value)
        if gl is not None:
            d_latent = d_latent + term.weight * gl
        if go is not None:
            d_output = d_output + term.weight * go
    grad = d_output
    for layer in reversed(model.decoder):
        grad = layer.backward(grad)
    grad = grad + d_latent
    for layer in reversed(model.encoder):
        grad = layer.backward(grad)
    params = model.parameters()
    grads = []
    for layer in model.layers:
        for arr in layer.gradients():
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"non-finite gradient in layer {layer.spec}")
            grads.append(arr)
    optimizer.step(params, grads, lr)
    return values


def train(
    model: AutoencoderModel,
    data: PointCloud,
    config: TrainConfig,
    terms: Optional[Sequence[LossTerm]] = None,
) -> Tuple[AutoencoderModel, List[Dict[str, float]]]:
    """Mini-batch training; returns the model and per-epoch history.

    Per epoch the history records the full-dataset eval-mode MSE, the
    mean per-batch value of every other active loss term, and the total
    (eval MSE plus the weighted term means).
    """
    if terms is None:
        terms = [mse_term()]
    points = data.points
    n = points.shape[0]
    optimizer = _Adam(model.parameters(), config)
    rng = np.random.default_rng(config.seed)
    history: List[Dict[str, float]] = []
    for epoch in range(config.epochs):
        active = _active_terms(terms, epoch)
        lr = config.lr_at(epoch)
        order = rng.permutation(n)
        batch_values: Dict[str, List[float]] = {}
        for start in range(0, n, config.batch_size):
            batch = points[order[start : start + config.batch_size]]
            values = backward_and_step(model, batch, active, optimizer, lr)
            for k, val in values.items():
                batch_values.setdefault(k, []).append(val)
        _, eval_out = forward(model, points, training=False)
        entry: Dict[str, float] = {"epoch": float(epoch), "mse": mse_loss(eval_out, points)}
        total = entry["mse"]
        for term in active:
            if term.name == "mse":
                continue
            mean_val = float(np.mean(batch_values.get(term.name, [0.0])))
            entry[term.name] = mean_val
            total += term.weight * mean_val
        entry["total"] = total
        history.append(entry)
    return model, history


# --- checkpoints ---------------------------------------------------------


def _spec_obj(spec: LayerSpec) -> dict:
    return {
        "in_dim": spec.in_dim,
        "out_dim": spec.out_dim,
        "activation": spec.activation,
        "batch_norm": spec.batch_norm,
    }


def save_model(model: AutoencoderModel, path) -> None:
    def layer_obj(layer: _Layer) -> dict:
        obj = {
            "weight": layer.weight.tolist(),
            "bias": layer.bias.tolist(),
        }
        if layer.spec.batch_norm:
            obj.update(
                gamma=layer.gamma.tolist(),
                beta=layer.beta.tolist(),
                running_mean=layer.running_mean.tolist(),
                running_var=layer.running_var.tolist(),
            )
        return obj

    obj = {
        "encoder_specs": [_spec_obj(s) for s in model.encoder_specs],
        "decoder_specs": [_spec_obj(s) for s in model.decoder_specs],
        "seed": model.seed,
        "encoder": [layer_obj(l) for l in model.encoder],
        "decoder": [layer_obj(l) for l in model.decoder],
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True))


def load_model(path) -> AutoencoderModel:
    obj = json.loads(Path(path).read_text())
    enc = [LayerSpec(**s) for s in obj["encoder_specs"]]
    dec = [LayerSpec(**s) for s in obj["decoder_specs"]]
    model = AutoencoderModel(enc, dec, obj["seed"])
    for layers, key in ((model.encoder, "encoder"), (model.decoder, "decoder")):
        for layer, data in zip(layers, obj[key]):
            layer.weight = np.array(data["weight"], dtype=np.float64)
            layer.bias = np.array(data["bias"], dtype=np.float64)
            if layer.spec.batch_norm:
                layer.gamma = np.array(data["gamma"], dtype=np.float64)
                layer.beta = np.array(data["beta"], dtype=np.float64)
                layer.running_mean = np.array(data["running_mean"], dtype=np.float64)
                layer.running_var = np.array(data["running_var"], dtype=np.float64)
    return model


def decoder_outputs(model: AutoencoderModel, latents: np.ndarray) -> np.ndarray:
    """Eval-mode decoder pass over explicit latent points."""
    h = np.asarray(latents, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != model.latent_dim:
        raise ValueError("latent batch has the wrong shape")
    for layer in model.decoder:
        h = layer.forward(h, training=False)
    return h
