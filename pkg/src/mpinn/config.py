"""Declarative run configuration: INI file with sections, strict keys.

Precedence is CLI flag > config file > built-in default.  Unknown
sections or keys are rejected before any computation starts, so a typo
cannot silently fall back to a default.
"""

import configparser
from dataclasses import dataclass, replace

from .errors import ConfigError
from .fieldio import ColumnMap
from .gridalign import Idw, Nearest
from .mlp import ACTIVATIONS, MlpSpec
from .model import MpinnConfig, default_nnh1_spec
from .train import TrainConfig


def _parse_widths(text):
    text = text.strip()
    if not text:
        return ()
    try:
        widths = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None
    if any(w < 1 for w in widths):
        raise ConfigError(f"layer widths must be >= 1, got {text!r}")
    return widths


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_float(text):
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _parse_optional_int(text):
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    return _parse_int(text)


def _parse_activation(text):
    name = text.strip().lower()
    if name not in ACTIVATIONS:
        raise ConfigError(f"unknown activation {text!r}; choose from {ACTIVATIONS}")
    return name


def _parse_str(text):
    return text.strip()


@dataclass(frozen=True)
class RunConfig:
    # [model]
    nnl_hidden: tuple[int, ...] = (20, 20, 20)
    nnl_activation: str = "relu"
    nnh2_hidden: tuple[int, ...] = (10, 10)
    nnh2_activation: str = "tanh"
    composition_mode: str = "convex_blend"
    alpha_trainable: bool = True
    # [train]
    epochs: int = 5000
    learning_rate: float = 1e-3
    lambda_l2: float = 1e-4
    seed: int = 0
    w_lf: float = 1.0
    w_hf: float = 1.0
    hf_budget: int | None = None
    # [align]
    method: str = "idw"
    idw_power: float = 2.0
    idw_k: int = 8
    # [data]
    x_col: str = "x"
    y_col: str = "y"
    value_col: str = "value"

    def mpinn_config(self):
        return MpinnConfig(
            nnl_spec=MlpSpec(2, self.nnl_hidden, 1, self.nnl_activation),
            nnh1_spec=default_nnh1_spec(),
            nnh2_spec=MlpSpec(3, self.nnh2_hidden, 1, self.nnh2_activation),
            composition_mode=self.composition_mode,
            alpha_trainable=self.alpha_trainable,
        )

    def train_config(self):
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            lambda_l2=self.lambda_l2,
            seed=self.seed,
            loss_weights=(self.w_lf, self.w_hf),
            composition_mode=self.composition_mode,
            hf_budget=self.hf_budget,
        )

    def interp_method(self):
        if self.method == "nearest":
            return Nearest()
        if self.method == "idw":
            return Idw(power=self.idw_power, k=self.idw_k)
        raise ConfigError(
            f"unknown interpolation method {self.method!r}; "
            "choose 'nearest' or 'idw'"
        )

    def column_map(self):
        return ColumnMap(x_col=self.x_col, y_col=self.y_col, value_col=self.value_col)


# (section, key) -> (RunConfig field, parser)
_SCHEMA = {
    ("model", "nnl_hidden"): ("nnl_hidden", _parse_widths),
    ("model", "nnl_activation"): ("nnl_activation", _parse_activation),
    ("model", "nnh2_hidden"): ("nnh2_hidden", _parse_widths),
    ("model", "nnh2_activation"): ("nnh2_activation", _parse_activation),
    ("model", "composition_mode"): ("composition_mode", _parse_str),
    ("model", "alpha_trainable"): ("alpha_trainable", _parse_bool),
    ("train", "epochs"): ("epochs", _parse_int),
    ("train", "learning_rate"): ("learning_rate", _parse_float),
    ("train", "lambda_l2"): ("lambda_l2", _parse_float),
    ("train", "seed"): ("seed", _parse_int),
    ("train", "w_lf"): ("w_lf", _parse_float),
    ("train", "w_hf"): ("w_hf", _parse_float),
    ("train", "hf_budget"): ("hf_budget", _parse_optional_int),
    ("align", "method"): ("method", _parse_str),
    ("align", "idw_power"): ("idw_power", _parse_float),
    ("align", "idw_k"): ("idw_k", _parse_int),
    ("data", "x_col"): ("x_col", _parse_str),
    ("data", "y_col"): ("y_col", _parse_str),
    ("data", "value_col"): ("value_col", _parse_str),
}

_SECTIONS = sorted({section for section, _ in _SCHEMA})


def load_run_config(path):
    """Parse and validate an INI run configuration."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as err:
        raise ConfigError(f"{path}: {err}") from None
    overrides = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"{path}: unknown section [{section}]; valid sections: {_SECTIONS}"
            )
        for key, raw in parser.items(section):
            if (section, key) not in _SCHEMA:
                raise ConfigError(f"{path}: unknown key {key!r} in section [{section}]")
            field, parse = _SCHEMA[(section, key)]
            try:
                overrides[field] = parse(raw)
            except ConfigError as err:
                raise ConfigError(f"{path}: [{section}] {key}: {err}") from None
    return replace(RunConfig(), **overrides)
