"""Closed-form multi-fidelity problem generators and a paired benchmark.

The generators stand in for solver exports: every sample comes from an
exact formula, so held-out error has a true reference.  Two families:

* linear - the high-fidelity field is ``rho * lf(x) + delta(x)`` with an
  affine delta, over a choice of smooth base fields;
* nonlinear - the classic 1-d benchmark pair
  ``y_h = (6*x1 - 2)**2 * sin(12*x1 - 4)`` and
  ``y_l = 0.5*y_h + 10*(x1 - 0.5) - 5``, embedded on the unit square
  with the second coordinate inert, so it flows through the same 2-d
  pipeline as real field data.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .fieldio import FieldDataset, FidelityPair
from .train import (
    compute_metrics,
    evaluate,
    select_hf_indices,
    single_fidelity_baseline,
    train,
)


def _sinusoidal(nodes):
    return np.sin(np.pi * nodes[:, 0]) * np.cos(np.pi * nodes[:, 1])


def _polynomial(nodes):
    x1, x2 = nodes[:, 0], nodes[:, 1]
    return x1 * x1 - x2 * x2 + x1 * x2 + 0.5


BASE_FIELDS = {"sinusoidal": _sinusoidal, "polynomial": _polynomial}


def forrester_high(x1):
    x1 = np.asarray(x1, dtype=np.float64)
    return (6.0 * x1 - 2.0) ** 2 * np.sin(12.0 * x1 - 4.0)


def forrester_low(x1):
    x1 = np.asarray(x1, dtype=np.float64)
    return 0.5 * forrester_high(x1) + 10.0 * (x1 - 0.5) - 5.0


@dataclass(frozen=True)
class LinearPairSpec:
    rho: float = 2.0
    delta_coeffs: tuple[float, float, float] = (3.0, 0.0, 0.0)  # d0 + d1*x1 + d2*x2
    base_field: str = "sinusoidal"
    lf_count: int = 200
    truth_count: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.base_field not in BASE_FIELDS:
            raise ValidationError(
                f"unknown base field {self.base_field!r}; "
                f"choose from {sorted(BASE_FIELDS)}"
            )
        if self.lf_count < 1 or self.truth_count < 1:
            raise ValidationError("node counts must be >= 1")

    def delta(self, nodes):
        d0, d1, d2 = self.delta_coeffs
        return d0 + d1 * nodes[:, 0] + d2 * nodes[:, 1]


@dataclass(frozen=True)
class NonlinearPairSpec:
    lf_count: int = 200
    truth_count: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.lf_count < 1 or self.truth_count < 1:
            raise ValidationError("node counts must be >= 1")


def _sample_nodes(rng, count):
    return rng.uniform(0.0, 1.0, size=(count, 2))


def gen_linear_pair(spec):
    """Pre-aligned pair plus a held-out truth set, all from the closed form."""
    base = BASE_FIELDS[spec.base_field]
    rng = np.random.default_rng(spec.seed)
    lf_nodes = _sample_nodes(rng, spec.lf_count)
    truth_nodes = _sample_nodes(rng, spec.truth_count)
    y_lf = base(lf_nodes)
    pair = FidelityPair(
        lf=FieldDataset(lf_nodes, y_lf, name="linear_lf"),
        hf_on_lf_nodes=FieldDataset(
            lf_nodes, spec.rho * y_lf + spec.delta(lf_nodes), name="linear_hf"
        ),
    )
    truth = FieldDataset(
        truth_nodes,
        spec.rho * base(truth_nodes) + spec.delta(truth_nodes),
        name="linear_truth",
    )
    return pair, truth


def gen_nonlinear_pair(spec):
    """Forrester-style pair on the unit square (second coordinate inert)."""
    rng = np.random.default_rng(spec.seed)
    lf_nodes = _sample_nodes(rng, spec.lf_count)
    truth_nodes = _sample_nodes(rng, spec.truth_count)
    pair = FidelityPair(
        lf=FieldDataset(lf_nodes, forrester_low(lf_nodes[:, 0]), name="nonlinear_lf"),
        hf_on_lf_nodes=FieldDataset(
            lf_nodes, forrester_high(lf_nodes[:, 0]), name="nonlinear_hf"
        ),
    )
    truth = FieldDataset(
        truth_nodes, forrester_high(truth_nodes[:, 0]), name="nonlinear_truth"
    )
    return pair, truth


CASES = {
    "linear": (LinearPairSpec(), gen_linear_pair),
    "nonlinear": (NonlinearPairSpec(), gen_nonlinear_pair),
}


@dataclass(frozen=True)
class BenchmarkRow:
    seed: int
    mpinn_rel_l2: float
    baseline_rel_l2: float
    winner: str


class BenchmarkResult:
    """Paired comparison over seeds: composite model vs single-fidelity MLP."""

    def __init__(self, case, rows):
        self.case = case
        self.rows = list(rows)

    @property
    def win_count(self):
        return sum(1 for r in self.rows if r.winner == "mpinn")

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("seed,mpinn_rel_l2,baseline_rel_l2,winner\n")
            for r in self.rows:
                fh.write(
                    f"{r.seed},{r.mpinn_rel_l2!r},{r.baseline_rel_l2!r},{r.winner}\n"
                )

    def summary(self):
        lines = [
            f"case: {self.case}",
            f"{'seed':>6} {'mpinn_rel_l2':>14} {'baseline_rel_l2':>16} winner",
        ]
        for r in self.rows:
            lines.append(
                f"{r.seed:>6} {r.mpinn_rel_l2:>14.6g} {r.baseline_rel_l2:>16.6g} "
                f"{r.winner}"
            )
        lines.append(
            f"multi-fidelity model wins {self.win_count} of {len(self.rows)} seeds"
        )
        return "\n".join(lines)


def run_benchmark(case, model_config, train_config, seeds):
    """Train the composite model and the baseline on identical budgets per seed."""
    if case not in CASES:
        raise ValidationError(f"unknown case {case!r}; choose from {sorted(CASES)}")
    base_spec, generator = CASES[case]
    rows = []
    for seed in seeds:
        spec = replace(base_spec, seed=seed)
        cfg = replace(train_config, seed=seed)
        pair, truth = generator(spec)
        model, _ = train(pair, model_config, cfg)
        mpinn_metrics = evaluate(model, truth)
        sel = select_hf_indices(len(pair), cfg.hf_budget, cfg.seed)
        hf_train = FieldDataset(
            pair.lf.nodes[sel], pair.hf_on_lf_nodes.values[sel], name="hf_train"
        )
        baseline, _ = single_fidelity_baseline(hf_train, model_config.nnl_spec, cfg)
        baseline_metrics = compute_metrics(
            baseline.predict_values(truth.nodes), truth.values
        )
        rows.append(
            BenchmarkRow(
                seed=seed,
                mpinn_rel_l2=mpinn_metrics.rel_l2,
                baseline_rel_l2=baseline_metrics.rel_l2,
                winner="mpinn"
                if mpinn_metrics.rel_l2 < baseline_metrics.rel_l2
                else "baseline",
            )
        )
    return BenchmarkResult(case, rows)
