"""Loss assembly and full-batch gradient training of the composite model.

The loss has three parts: mean squared error of the low-fidelity net on
every low-fidelity point, mean squared error of the composed
high-fidelity prediction on the (optionally subsampled) high-fidelity
training points, and an L2 penalty on the nonlinear correction net's
weight matrices (biases excluded).  Both data terms are computed in
normalized space so the default weights and learning rate behave the
same for unit-scale benchmarks and pascal-scale pressure fields.

Training is deterministic given the seed: seeded initialization, seeded
high-fidelity subsampling, fixed-order full-batch reductions, and a
plain Adam loop.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .errors import TrainingAbort, ValidationError
from .fieldio import FieldDataset, fit_normalization
from .mlp import TapeMlp, init_params, mlp_batch_forward
from .model import COMPOSITION_MODES, MpinnModel, compose_normalized, predict_values

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 1e-3
    lambda_l2: float = 1e-4
    seed: int = 0
    loss_weights: tuple[float, float] = (1.0, 1.0)  # (w_lf, w_hf)
    composition_mode: str = "convex_blend"
    hf_budget: int | None = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.lambda_l2 < 0:
            raise ValidationError(f"lambda_l2 must be >= 0, got {self.lambda_l2}")
        w_lf, w_hf = self.loss_weights
        if w_lf < 0 or w_hf < 0 or w_lf + w_hf == 0:
            raise ValidationError(
                f"loss weights must be >= 0 and not both zero, got {self.loss_weights}"
            )
        if self.composition_mode not in COMPOSITION_MODES:
            raise ValidationError(
                f"composition_mode must be one of {COMPOSITION_MODES}"
            )
        if self.hf_budget is not None and self.hf_budget < 0:
            raise ValidationError(f"hf_budget must be >= 0, got {self.hf_budget}")


@dataclass(frozen=True)
class Metrics:
    """Error summary of a prediction against a reference field."""

    mse: float
    rmse: float
    rel_l2: float | None  # None when the reference has zero norm
    max_abs_err: float
    n: int


def compute_metrics(predicted, truth):
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predicted.shape != truth.shape or predicted.ndim != 1 or predicted.size == 0:
        raise ValidationError(
            f"metrics need two equal-length value vectors, got "
            f"{predicted.shape} vs {truth.shape}"
        )
    err = predicted - truth
    mse = float(np.mean(err * err))
    truth_norm = float(np.linalg.norm(truth))
    rel_l2 = float(np.linalg.norm(err) / truth_norm) if truth_norm > 0 else None
    return Metrics(
        mse=mse,
        rmse=float(np.sqrt(mse)),
        rel_l2=rel_l2,
        max_abs_err=float(np.max(np.abs(err))),
        n=predicted.size,
    )


class TrainReport:
    """Per-epoch loss trace.  Row e holds the loss at the parameters seen
    entering epoch e; the last row is the final model's loss."""

    __slots__ = ("epoch", "total", "lf_mse", "hf_mse", "l2_penalty", "alpha",
                 "final_alpha", "wall_time")

    def __init__(self, epoch, total, lf_mse, hf_mse, l2_penalty, alpha,
                 final_alpha, wall_time):
        self.epoch = np.asarray(epoch, dtype=np.int64)
        self.total = np.asarray(total, dtype=np.float64)
        self.lf_mse = np.asarray(lf_mse, dtype=np.float64)
        self.hf_mse = np.asarray(hf_mse, dtype=np.float64)
        self.l2_penalty = np.asarray(l2_penalty, dtype=np.float64)
        self.alpha = np.asarray(alpha, dtype=np.float64)
        self.final_alpha = float(final_alpha)
        self.wall_time = float(wall_time)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,total,lf_mse,hf_mse,l2,alpha\n")
            for row in zip(self.epoch, self.total, self.lf_mse, self.hf_mse,
                           self.l2_penalty, self.alpha):
                fh.write(",".join([str(int(row[0]))] +
                                  [repr(float(v)) for v in row[1:]]) + "\n")


class Adam:
    """Adaptive-moment estimation; update is lr * m_hat / (sqrt(v_hat) + eps)."""

    def __init__(self, size, learning_rate,
                 beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(size)
        self.v = np.zeros(size)

    def step(self, params, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        params -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def select_hf_indices(n, budget, seed):
    """Deterministic high-fidelity subsample: seeded shuffle, first ``budget``
    indices, returned sorted.  ``budget=None`` keeps every point."""
    if budget is None or budget >= n:
        if budget is not None and budget > n:
            raise ValidationError(f"hf_budget={budget} exceeds available {n} points")
        return np.arange(n)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:budget])


def _nnh2_weight_squares(config, params_nnh2):
    total = 0.0
    offset = 0
    for fan_in, fan_out in config.nnh2_spec.layer_dims():
        w = params_nnh2[offset : offset + fan_in * fan_out]
        total += float(np.sum(w * w))
        offset += fan_in * fan_out + fan_out
    return total


def total_loss(model, pair, cfg):
    """Loss of an existing model on an aligned pair; returns (total, parts).

    ``parts`` holds the unweighted ``lf_mse`` and ``hf_mse`` plus the
    lambda-weighted ``l2_penalty``; the weighted sum equals the total.
    """
    if model.config.composition_mode != cfg.composition_mode:
        raise ValidationError(
            f"model composes with {model.config.composition_mode!r} but the "
            f"training config says {cfg.composition_mode!r}"
        )
    w_lf, w_hf = cfg.loss_weights
    norm = model.norm
    xn = norm.norm_inputs(pair.lf.nodes)
    y_lf_n = norm.norm_values(pair.lf.values)
    low = mlp_batch_forward(model.config.nnl_spec, model.params_nnl, xn)[:, 0]
    lf_mse = float(np.mean((low - y_lf_n) ** 2))
    sel = select_hf_indices(len(pair), cfg.hf_budget, cfg.seed)
    if len(sel) == 0:
        if w_hf > 0:
            raise ValidationError("high-fidelity training set is empty but w_hf > 0")
        hf_mse = 0.0
    else:
        y_hf_n = norm.norm_values(pair.hf_on_lf_nodes.values[sel])
        high = compose_normalized(model, pair.lf.nodes[sel])[:, 0]
        hf_mse = float(np.mean((high - y_hf_n) ** 2))
    l2_penalty = cfg.lambda_l2 * _nnh2_weight_squares(model.config, model.params_nnh2)
    total = w_lf * lf_mse + w_hf * hf_mse + l2_penalty
    return total, {"lf_mse": lf_mse, "hf_mse": hf_mse, "l2_penalty": l2_penalty}


def _alpha_of(raw):
    return float(0.5 + 0.5 * np.tanh(0.5 * raw))


class _Objective:
    """Tape-based loss over one shared flat vector [nnl | nnh1 | nnh2 | raw_alpha]."""

    def __init__(self, pair, config, cfg):
        self.config = config
        self.cfg = cfg
        self.norm = fit_normalization(pair.lf)
        sizes = [
            config.nnl_spec.param_count(),
            config.nnh1_spec.param_count(),
            config.nnh2_spec.param_count(),
        ]
        self.theta = np.concatenate(
            [
                init_params(config.nnl_spec, cfg.seed),
                init_params(config.nnh1_spec, cfg.seed + 1),
                init_params(config.nnh2_spec, cfg.seed + 2),
                [0.0],  # raw_alpha -> alpha = 0.5
            ]
        )
        bounds = np.cumsum([0] + sizes)
        self.nnl = TapeMlp(config.nnl_spec, self.theta[bounds[0] : bounds[1]])
        self.nnh1 = TapeMlp(config.nnh1_spec, self.theta[bounds[1] : bounds[2]])
        self.nnh2 = TapeMlp(config.nnh2_spec, self.theta[bounds[2] : bounds[3]])
        self.raw_alpha = ag.Tensor(self.theta[bounds[3] :])  # view, shape (1,)
        self._bounds = bounds

        xn = self.norm.norm_inputs(pair.lf.nodes)
        self.x_lf = ag.constant(xn)
        self.y_lf = ag.constant(self.norm.norm_values(pair.lf.values)[:, np.newaxis])
        self.sel = select_hf_indices(len(pair), cfg.hf_budget, cfg.seed)
        if len(self.sel) == 0 and cfg.loss_weights[1] > 0:
            raise ValidationError("high-fidelity training set is empty but w_hf > 0")
        self.x_hf = ag.constant(xn[self.sel])
        self.y_hf = ag.constant(
            self.norm.norm_values(pair.hf_on_lf_nodes.values[self.sel])[:, np.newaxis]
        )
        self.alpha_trainable = (
            config.alpha_trainable and config.composition_mode == "convex_blend"
        )

    def loss_graph(self):
        """Build one forward graph; returns (loss tensor, component floats)."""
        w_lf, w_hf = self.cfg.loss_weights
        low = self.nnl(self.x_lf)
        lf_mse = ag.mean(ag.square(low - self.y_lf))
        if len(self.sel) > 0:
            low_hf = self.nnl(self.x_hf)
            z = ag.concat_cols(self.x_hf, low_hf)
            linear = self.nnh1(z)
            nonlinear = self.nnh2(z)
            if self.config.composition_mode == "convex_blend":
                alpha = ag.logistic(self.raw_alpha)
                high = alpha * linear + (1.0 - alpha) * nonlinear
            else:
                high = low_hf + linear + nonlinear
            hf_mse = ag.mean(ag.square(high - self.y_hf))
        else:
            hf_mse = None
        l2_raw = None
        for w in self.nnh2.weight_tensors():
            term = ag.asum(ag.square(w))
            l2_raw = term if l2_raw is None else l2_raw + term
        total = w_lf * lf_mse + self.cfg.lambda_l2 * l2_raw
        if hf_mse is not None:
            total = total + w_hf * hf_mse
        parts = {
            "lf_mse": float(lf_mse.value),
            "hf_mse": float(hf_mse.value) if hf_mse is not None else 0.0,
            "l2_penalty": self.cfg.lambda_l2 * float(l2_raw.value),
        }
        return total, parts

    def gradient(self, loss):
        loss.backward()
        grad = np.concatenate(
            [
                self.nnl.grad_vector(),
                self.nnh1.grad_vector(),
                self.nnh2.grad_vector(),
                self.raw_alpha.grad
                if self.raw_alpha.grad is not None
                else np.zeros(1),
            ]
        )
        if not self.alpha_trainable:
            grad[-1] = 0.0
        return grad

    def build_model(self):
        b = self._bounds
        return MpinnModel(
            self.config,
            self.theta[b[0] : b[1]],
            self.theta[b[1] : b[2]],
            self.theta[b[2] : b[3]],
            raw_alpha=float(self.theta[-1]),
            norm=self.norm,
        )


def train(pair, model_config, cfg):
    """Full-batch optimization of all parameters including the blend.

    Returns the trained model and a :class:`TrainReport` whose trace has
    ``epochs + 1`` rows (entering-epoch losses plus the final loss).
    Aborts with :class:`TrainingAbort` if the loss goes non-finite.
    """
    if model_config.composition_mode != cfg.composition_mode:
        raise ValidationError(
            f"model composes with {model_config.composition_mode!r} but the "
            f"training config says {cfg.composition_mode!r}"
        )
    start = time.perf_counter()
    objective = _Objective(pair, model_config, cfg)
    adam = Adam(objective.theta.size, cfg.learning_rate)
    trace = {key: [] for key in ("total", "lf_mse", "hf_mse", "l2_penalty", "alpha")}

    def record(total_value, parts):
        trace["total"].append(total_value)
        trace["lf_mse"].append(parts["lf_mse"])
        trace["hf_mse"].append(parts["hf_mse"])
        trace["l2_penalty"].append(parts["l2_penalty"])
        trace["alpha"].append(_alpha_of(objective.theta[-1]))

    for epoch in range(cfg.epochs):
        loss, parts = objective.loss_graph()
        total_value = float(loss.value)
        if not np.isfinite(total_value):
            raise TrainingAbort(
                f"non-finite loss at epoch {epoch}: "
                f"lf_mse={parts['lf_mse']}, hf_mse={parts['hf_mse']}, "
                f"l2_penalty={parts['l2_penalty']}"
            )
        record(total_value, parts)
        adam.step(objective.theta, objective.gradient(loss))
    final_loss, final_parts = objective.loss_graph()
    if not np.isfinite(float(final_loss.value)):
        raise TrainingAbort(
            f"non-finite loss after the final update: components {final_parts}"
        )
    record(float(final_loss.value), final_parts)
    model = objective.build_model()
    report = TrainReport(
        epoch=np.arange(cfg.epochs + 1),
        total=trace["total"],
        lf_mse=trace["lf_mse"],
        hf_mse=trace["hf_mse"],
        l2_penalty=trace["l2_penalty"],
        alpha=trace["alpha"],
        final_alpha=model.alpha,
        wall_time=time.perf_counter() - start,
    )
    return model, report


def evaluate(model, truth):
    """Metrics of the composite prediction against a reference dataset."""
    if len(truth) == 0:
        raise ValidationError("truth dataset is empty")
    return compute_metrics(predict_values(model, truth.nodes), truth.values)


@dataclass(frozen=True)
class SingleFidelityModel:
    """Plain MLP trained on high-fidelity points alone (the comparison arm)."""

    spec: object
    params: np.ndarray
    norm: object

    def predict_values(self, nodes):
        xn = self.norm.norm_inputs(np.asarray(nodes, dtype=np.float64))
        out = mlp_batch_forward(self.spec, self.params, xn)
        return self.norm.denorm_values(out[:, 0])


def single_fidelity_baseline(hf_points, spec, cfg):
    """Train one MLP on the high-fidelity points with the same optimizer.

    Loss is the plain normalized MSE (no penalty); returns the model and
    its training-set metrics.
    """
    if spec.input_dim != 2:
        raise ValidationError("baseline network takes the two spatial coordinates")
    if len(hf_points) == 0:
        raise ValidationError("baseline needs at least one training point")
    norm = fit_normalization(hf_points)
    params = init_params(spec, cfg.seed)
    net = TapeMlp(spec, params)
    x = ag.constant(norm.norm_inputs(hf_points.nodes))
    y = ag.constant(norm.norm_values(hf_points.values)[:, np.newaxis])
    adam = Adam(params.size, cfg.learning_rate)
    for epoch in range(cfg.epochs):
        loss = ag.mean(ag.square(net(x) - y))
        if not np.isfinite(float(loss.value)):
            raise TrainingAbort(f"non-finite baseline loss at epoch {epoch}")
        loss.backward()
        adam.step(params, net.grad_vector())
    model = SingleFidelityModel(spec=spec, params=params.copy(), norm=norm)
    metrics = compute_metrics(model.predict_values(hf_points.nodes), hf_points.values)
    return model, metrics
