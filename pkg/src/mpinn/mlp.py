"""Dense fully connected networks over flat parameter vectors.

Parameters for a network are stored as a single 1-d float64 array with a
deterministic layout: for each layer, the weight matrix in row-major
order (entry [i, j] connects input i to output j) followed by the bias
vector.  Hidden layers share one activation; the output layer is always
affine.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .errors import ValidationError

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass(frozen=True)
class MlpSpec:
    """Shape of one network: input_dim -> hidden_widths -> output_dim."""

    input_dim: int
    hidden_widths: tuple[int, ...] = ()
    output_dim: int = 1
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(
            self, "hidden_widths", tuple(int(w) for w in self.hidden_widths)
        )
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValidationError(
                f"input_dim and output_dim must be >= 1, got "
                f"{self.input_dim} -> {self.output_dim}"
            )
        if any(w < 1 for w in self.hidden_widths):
            raise ValidationError(f"hidden widths must be >= 1: {self.hidden_widths}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(
                f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}"
            )

    def layer_dims(self):
        dims = (self.input_dim, *self.hidden_widths, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))

    def param_count(self):
        return sum(fi * fo + fo for fi, fo in self.layer_dims())


def init_params(spec, seed):
    """Seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero."""
    rng = np.random.default_rng(seed)
    parts = []
    for fan_in, fan_out in spec.layer_dims():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        parts.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        parts.append(np.zeros(fan_out))
    return np.concatenate(parts)


def check_params(spec, params):
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1:
        raise ValidationError("parameter vector must be 1-d")
    if params.size != spec.param_count():
        raise ValidationError(
            f"parameter vector has {params.size} entries, spec needs "
            f"{spec.param_count()}"
        )
    if not np.isfinite(params).all():
        raise ValidationError("parameter vector contains non-finite entries")
    return params


def unflatten(spec, params):
    """Views (no copies) of the flat vector as [(W, b), ...] per layer."""
    params = check_params(spec, params)
    layers = []
    offset = 0
    for fan_in, fan_out in spec.layer_dims():
        w = params[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset : offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def flatten(spec, layers):
    """Inverse of :func:`unflatten`; returns a fresh flat vector."""
    parts = []
    for (fan_in, fan_out), (w, b) in zip(spec.layer_dims(), layers):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
            raise ValidationError(
                f"layer shapes {w.shape}/{b.shape} do not match spec "
                f"({fan_in}, {fan_out})"
            )
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _check_batch(spec, inputs):
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
        raise ValidationError(
            f"input batch has shape {inputs.shape}, expected (n, {spec.input_dim})"
        )
    if not np.isfinite(inputs).all():
        raise ValidationError("input batch contains non-finite entries")
    return inputs


def mlp_batch_forward(spec, params, inputs):
    """Evaluate the network row-wise on an (n, input_dim) batch."""
    inputs = _check_batch(spec, inputs)
    layers = unflatten(spec, params)
    a = inputs
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        a = a @ w + b
        if i < last:
            if spec.activation == "relu":
                a = np.maximum(a, 0.0)
            elif spec.activation == "tanh":
                a = np.tanh(a)
    return a


def mlp_forward(spec, params, x):
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"input must be a 1-d vector, got shape {x.shape}")
    return mlp_batch_forward(spec, params, x[np.newaxis, :])[0]


class TapeMlp:
    """A network bound to a flat parameter vector, evaluable on graph tensors.

    The layer tensors are views of the flat vector, so in-place updates
    to it (an optimizer step) are visible on the next forward pass
    without rebuilding the object.
    """

    def __init__(self, spec, params):
        self.spec = spec
        self.params = check_params(spec, params)
        self.layers = [
            (ag.Tensor(w), ag.Tensor(b)) for w, b in unflatten(spec, params)
        ]

    def __call__(self, x):
        a = x if isinstance(x, ag.Tensor) else ag.constant(x)
        last = len(self.layers) - 1
        for i, (w, b) in enumerate(self.layers):
            a = ag.affine(a, w, b)
            if i < last:
                if self.spec.activation == "relu":
                    a = ag.relu(a)
                elif self.spec.activation == "tanh":
                    a = ag.tanh(a)
        return a

    def weight_tensors(self):
        return [w for w, _ in self.layers]

    def grad_vector(self):
        """Flat gradient in parameter layout; zeros where nothing flowed."""
        parts = []
        for w, b in self.layers:
            gw = w.grad if w.grad is not None else np.zeros_like(w.value)
            gb = b.grad if b.grad is not None else np.zeros_like(b.value)
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)


def grad_scalar(specs, params_list, loss_fn):
    """Exact reverse-mode gradients of a scalar loss over several networks.

    ``loss_fn`` receives one :class:`TapeMlp` handle per (spec, params)
    pair and must return a scalar built from the supported primitives in
    :mod:`mpinn.autograd`.  Returns one flat gradient per network.
    """
    if len(specs) != len(params_list):
        raise ValidationError("specs and params lists differ in length")
    nets = [TapeMlp(spec, params) for spec, params in zip(specs, params_list)]
    loss = loss_fn(nets)
    if not isinstance(loss, ag.Tensor):
        raise ValidationError("loss_fn must return an autograd Tensor")
    loss.backward()
    return [net.grad_vector() for net in nets]
