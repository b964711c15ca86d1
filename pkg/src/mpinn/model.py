"""The composite multi-fidelity model and its persistence format.

Three networks cooperate: NNL maps 2-d coordinates to the low-fidelity
field; NNH1 (affine) and NNH2 (small nonlinear net) each map the triple
(x1, x2, predicted low-fidelity value) to a high-fidelity correction.
Two composition rules are supported:

* ``convex_blend`` - alpha * linear + (1 - alpha) * nonlinear, with
  alpha = logistic(raw_alpha) kept in (0, 1) and trainable;
* ``additive`` - low-fidelity prediction + linear + nonlinear.

All networks operate in z-score-normalized space (fitted on the
low-fidelity training set); composition happens there too, and the
result is denormalized once at the end.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ModelFormatError, ValidationError
from .fieldio import FieldDataset, NormalizationMeta
from .mlp import MlpSpec, check_params, init_params, mlp_batch_forward

COMPOSITION_MODES = ("convex_blend", "additive")

# Recommended size band for the nonlinear correction net.
NNH2_DEPTH_RANGE = (1, 2)
NNH2_WIDTH_RANGE = (4, 20)

MODEL_SCHEMA_VERSION = 1


def default_nnl_spec():
    return MlpSpec(2, (20, 20, 20), 1, "relu")


def default_nnh1_spec():
    return MlpSpec(3, (), 1, "identity")


def default_nnh2_spec():
    return MlpSpec(3, (10, 10), 1, "tanh")


@dataclass(frozen=True)
class MpinnConfig:
    nnl_spec: MlpSpec = default_nnl_spec()
    nnh1_spec: MlpSpec = default_nnh1_spec()
    nnh2_spec: MlpSpec = default_nnh2_spec()
    composition_mode: str = "convex_blend"
    alpha_trainable: bool = True

    def __post_init__(self):
        if self.composition_mode not in COMPOSITION_MODES:
            raise ValidationError(
                f"composition_mode must be one of {COMPOSITION_MODES}, "
                f"got {self.composition_mode!r}"
            )
        if self.nnl_spec.input_dim != 2:
            raise ValidationError("NNL takes the two spatial coordinates")
        for label, spec in (("NNH1", self.nnh1_spec), ("NNH2", self.nnh2_spec)):
            if spec.input_dim != 3:
                raise ValidationError(
                    f"{label} takes (x1, x2, low-fidelity value); input_dim must be 3"
                )
        for label, spec in (
            ("NNL", self.nnl_spec),
            ("NNH1", self.nnh1_spec),
            ("NNH2", self.nnh2_spec),
        ):
            if spec.output_dim != 1:
                raise ValidationError(f"{label} must output a single scalar")
        if self.nnh1_spec.hidden_widths != () or self.nnh1_spec.activation != "identity":
            raise ValidationError(
                "NNH1 is the linear correction: no hidden layers, identity activation"
            )
        depth = len(self.nnh2_spec.hidden_widths)
        lo_d, hi_d = NNH2_DEPTH_RANGE
        lo_w, hi_w = NNH2_WIDTH_RANGE
        if not lo_d <= depth <= hi_d or any(
            not lo_w <= w <= hi_w for w in self.nnh2_spec.hidden_widths
        ):
            warnings.warn(
                f"NNH2 shape {self.nnh2_spec.hidden_widths} is outside the "
                f"recommended band (depth {lo_d}-{hi_d}, width {lo_w}-{hi_w}); "
                "proceeding anyway",
                stacklevel=2,
            )


class MpinnModel:
    """Immutable bundle of config, parameters, blend state, and normalization."""

    __slots__ = ("config", "params_nnl", "params_nnh1", "params_nnh2", "raw_alpha", "norm")

    def __init__(self, config, params_nnl, params_nnh1, params_nnh2, raw_alpha, norm):
        pl = check_params(config.nnl_spec, params_nnl).copy()
        p1 = check_params(config.nnh1_spec, params_nnh1).copy()
        p2 = check_params(config.nnh2_spec, params_nnh2).copy()
        raw_alpha = float(raw_alpha)
        if not np.isfinite(raw_alpha):
            raise ValidationError("raw_alpha must be finite")
        for arr in (pl, p1, p2):
            arr.setflags(write=False)
        object.__setattr__(self, "config", config)
        object.__setattr__(self, "params_nnl", pl)
        object.__setattr__(self, "params_nnh1", p1)
        object.__setattr__(self, "params_nnh2", p2)
        object.__setattr__(self, "raw_alpha", raw_alpha)
        object.__setattr__(self, "norm", norm)

    def __setattr__(self, key, value):
        raise AttributeError("MpinnModel is immutable")

    @property
    def alpha(self):
        """Blend weight in (0, 1): logistic(raw_alpha)."""
        return float(0.5 + 0.5 * np.tanh(0.5 * self.raw_alpha))


def init_model(config, norm, seed):
    """Freshly initialized model; per-network seeds derive from ``seed``."""
    return MpinnModel(
        config,
        init_params(config.nnl_spec, seed),
        init_params(config.nnh1_spec, seed + 1),
        init_params(config.nnh2_spec, seed + 2),
        raw_alpha=0.0,
        norm=norm,
    )


def _check_stage(values, network):
    if not np.isfinite(values).all():
        raise ValidationError(f"non-finite value produced by {network}")
    return values


def _check_nodes(nodes):
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) == 0:
        raise ValidationError(
            f"nodes must be a non-empty (n, 2) array, got shape {nodes.shape}"
        )
    if not np.isfinite(nodes).all():
        raise ValidationError("nodes contain non-finite coordinates")
    return nodes


def _branches_normalized(model, nodes):
    """Normalized-space outputs (y_low, linear, nonlinear), each (n, 1)."""
    cfg = model.config
    xn = model.norm.norm_inputs(nodes)
    y_low = _check_stage(mlp_batch_forward(cfg.nnl_spec, model.params_nnl, xn), "NNL")
    z = np.concatenate([xn, y_low], axis=1)
    linear = _check_stage(
        mlp_batch_forward(cfg.nnh1_spec, model.params_nnh1, z), "NNH1"
    )
    nonlinear = _check_stage(
        mlp_batch_forward(cfg.nnh2_spec, model.params_nnh2, z), "NNH2"
    )
    return y_low, linear, nonlinear


def compose_normalized(model, nodes):
    """High-fidelity prediction in normalized space, shape (n, 1)."""
    y_low, linear, nonlinear = _branches_normalized(model, nodes)
    if model.config.composition_mode == "convex_blend":
        a = model.alpha
        out = a * linear + (1.0 - a) * nonlinear
    else:
        out = y_low + linear + nonlinear
    return _check_stage(out, "composition")


def predict_low_values(model, nodes):
    """Denormalized low-fidelity prediction at each node, shape (n,)."""
    nodes = _check_nodes(nodes)
    xn = model.norm.norm_inputs(nodes)
    y_low = _check_stage(
        mlp_batch_forward(model.config.nnl_spec, model.params_nnl, xn), "NNL"
    )
    return model.norm.denorm_values(y_low[:, 0])


def predict_values(model, nodes):
    """Denormalized high-fidelity prediction at each node, shape (n,)."""
    nodes = _check_nodes(nodes)
    return model.norm.denorm_values(compose_normalized(model, nodes)[:, 0])


def predict_low(model, x):
    """Low-fidelity surrogate value at one coordinate pair."""
    return float(predict_low_values(model, np.asarray(x, dtype=np.float64)[np.newaxis, :])[0])


def compose_high(model, x):
    """High-fidelity composite value at one coordinate pair."""
    return float(predict_values(model, np.asarray(x, dtype=np.float64)[np.newaxis, :])[0])


def compose_components(model, nodes):
    """Denormalized per-branch values, for diagnostics and tests.

    Returns a dict with ``y_low``, ``linear``, ``nonlinear`` (each branch
    denormalized on its own) and the composed ``y_high``.
    """
    nodes = _check_nodes(nodes)
    y_low, linear, nonlinear = _branches_normalized(model, nodes)
    return {
        "y_low": model.norm.denorm_values(y_low[:, 0]),
        "linear": model.norm.denorm_values(linear[:, 0]),
        "nonlinear": model.norm.denorm_values(nonlinear[:, 0]),
        "y_high": predict_values(model, nodes),
    }


def predict_field(model, nodes, name="prediction"):
    """Composite prediction as a dataset on the given nodes (order kept)."""
    nodes = _check_nodes(nodes)
    return FieldDataset(nodes, predict_values(model, nodes), name=name)


# -- persistence ------------------------------------------------------------


def _spec_to_doc(spec):
    return {
        "input_dim": spec.input_dim,
        "hidden_widths": list(spec.hidden_widths),
        "output_dim": spec.output_dim,
        "activation": spec.activation,
    }


def _spec_from_doc(doc, label):
    try:
        return MlpSpec(
            int(doc["input_dim"]),
            tuple(int(w) for w in doc["hidden_widths"]),
            int(doc["output_dim"]),
            str(doc["activation"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"bad {label} spec: {err}") from None


def save_model(model, path):
    """Write the model as a self-describing JSON document.

    Floats are serialized with shortest-repr precision, so a load
    reproduces every parameter bit-exactly.
    """
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "config": {
            "nnl": _spec_to_doc(model.config.nnl_spec),
            "nnh1": _spec_to_doc(model.config.nnh1_spec),
            "nnh2": _spec_to_doc(model.config.nnh2_spec),
            "composition_mode": model.config.composition_mode,
            "alpha_trainable": model.config.alpha_trainable,
        },
        "normalization": {
            "input_mean": [float(v) for v in model.norm.input_mean],
            "input_std": [float(v) for v in model.norm.input_std],
            "output_mean": float(model.norm.output_mean),
            "output_std": float(model.norm.output_std),
        },
        "raw_alpha": model.raw_alpha,
        "params": {
            "nnl": model.params_nnl.tolist(),
            "nnh1": model.params_nnh1.tolist(),
            "nnh2": model.params_nnh2.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(doc, key, path):
    if key not in doc:
        raise ModelFormatError(f"{path}: missing key {key!r}")
    return doc[key]


def load_model(path):
    """Read a model written by :func:`save_model`; never returns a partial one."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise ModelFormatError(f"{path}: not a valid model file: {err}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object at top level")
    version = _require(doc, "schema_version", path)
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model schema version {version!r} "
            f"(this build reads version {MODEL_SCHEMA_VERSION})"
        )
    cfg_doc = _require(doc, "config", path)
    norm_doc = _require(doc, "normalization", path)
    params_doc = _require(doc, "params", path)
    try:
        config = MpinnConfig(
            nnl_spec=_spec_from_doc(_require(cfg_doc, "nnl", path), "nnl"),
            nnh1_spec=_spec_from_doc(_require(cfg_doc, "nnh1", path), "nnh1"),
            nnh2_spec=_spec_from_doc(_require(cfg_doc, "nnh2", path), "nnh2"),
            composition_mode=_require(cfg_doc, "composition_mode", path),
            alpha_trainable=bool(_require(cfg_doc, "alpha_trainable", path)),
        )
        norm = NormalizationMeta(
            input_mean=tuple(float(v) for v in _require(norm_doc, "input_mean", path)),
            input_std=tuple(float(v) for v in _require(norm_doc, "input_std", path)),
            output_mean=float(_require(norm_doc, "output_mean", path)),
            output_std=float(_require(norm_doc, "output_std", path)),
        )
        return MpinnModel(
            config,
            np.asarray(_require(params_doc, "nnl", path), dtype=np.float64),
            np.asarray(_require(params_doc, "nnh1", path), dtype=np.float64),
            np.asarray(_require(params_doc, "nnh2", path), dtype=np.float64),
            raw_alpha=float(_require(doc, "raw_alpha", path)),
            norm=norm,
        )
    except ModelFormatError:
        raise
    except (ValidationError, TypeError, ValueError) as err:
        raise ModelFormatError(f"{path}: {err}") from None
