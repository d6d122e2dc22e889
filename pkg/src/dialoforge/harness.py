"""Baseline policies and the error-rate robustness sweep.

Two framework-free baselines exercise the task interface: a memorizing
lookup table (clean synthetic data is exactly solvable, so it doubles as an
oracle) and per-action logistic regression trained with mini-batch gradient
descent.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dataset import Dataset, generate_dataset
from .encoding import encode_dataset
from .engine import GeneratorConfig
from .errors import DivergenceError, EmptySplit, ValidationError, WidthMismatch
from .injection import ErrorConfig, inject_errors
from .metrics import MetricsReport, compute_metrics
from .ontology import Ontology
from .rng import derive_seed

MODEL_KINDS = ("memorizer", "linear")


@dataclass
class MemorizerModel:
    """Maps each training state to its majority target set."""

    state_width: int
    target_width: int
    table: dict[bytes, np.ndarray]
    fallback: np.ndarray

    def predict_one(self, state: np.ndarray) -> np.ndarray:
        if state.shape[-1] != self.state_width:
            raise WidthMismatch(f"state width {state.shape[-1]} != {self.state_width}")
        hit = self.table.get(np.packbits(state.astype(np.uint8)).tobytes())
        return (hit if hit is not None else self.fallback).copy()


@dataclass
class LinearModel:
    """Independent per-action sigmoid scorers over the binary state."""

    weights: np.ndarray  # (state_width, n_actions)
    bias: np.ndarray  # (n_actions,)
    threshold: float = 0.5
    loss_history: list[float] = field(default_factory=list)

    @property
    def state_width(self) -> int:
        return self.weights.shape[0]

    def scores(self, states: np.ndarray) -> np.ndarray:
        return _sigmoid(states.astype(np.float64) @ self.weights + self.bias)

    def predict_one(self, state: np.ndarray) -> np.ndarray:
        if state.shape[-1] != self.state_width:
            raise WidthMismatch(f"state width {state.shape[-1]} != {self.state_width}")
        s = self.scores(state.reshape(1, -1))[0]
        out = (s >= self.threshold).astype(np.uint8)
        if not out.any():
            out[int(np.argmax(s))] = 1  # argmax ties resolve to the lowest index
        return out


Model = Union[MemorizerModel, LinearModel]


def _pack_rows(states: np.ndarray) -> list[bytes]:
    packed = np.packbits(states.astype(np.uint8), axis=1)
    return [row.tobytes() for row in packed]


def train_memorizer(train: tuple[np.ndarray, np.ndarray]) -> MemorizerModel:
    """Majority target per distinct state; ties break to the lexicographically
    smallest serialized target, and the fallback is the global majority."""
    states, targets = train
    if states.shape[0] == 0:
        raise EmptySplit("cannot train a memorizer on an empty split")

    per_state: dict[bytes, Counter] = {}
    overall: Counter = Counter()
    target_bytes = [t.tobytes() for t in targets.astype(np.uint8)]
    for key, tb in zip(_pack_rows(states), target_bytes):
        per_state.setdefault(key, Counter())[tb] += 1
        overall[tb] += 1

    width = targets.shape[1]

    def majority(counter: Counter) -> np.ndarray:
        best = min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        return np.frombuffer(best, dtype=np.uint8).copy()

    table = {key: majority(c) for key, c in per_state.items()}
    return MemorizerModel(
        state_width=states.shape[1],
        target_width=width,
        table=table,
        fallback=majority(overall),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    states: np.ndarray,
    targets: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean binary cross-entropy over (sample, action) pairs plus an L2 term,
    with its analytic gradient."""
    x = states.astype(np.float64)
    y = targets.astype(np.float64)
    n, a = y.shape
    with np.errstate(over="ignore"):  # diverging runs overflow to inf, caught upstream
        z = x @ weights + bias
        # log(1 + e^z) - y*z, computed stably
        loss = float(np.sum(np.logaddexp(0.0, z) - y * z) / (n * a))
        loss += 0.5 * l2 * float(np.sum(weights * weights))
        p = _sigmoid(z)
        grad_w = x.T @ (p - y) / (n * a) + l2 * weights
        grad_b = np.sum(p - y, axis=0) / (n * a)
    return loss, grad_w, grad_b


def train_linear(
    train: tuple[np.ndarray, np.ndarray],
    epochs: int = 30,
    learning_rate: float = 0.5,
    l2: float = 0.0,
    seed: int = 0,
    batch_size: int = 128,
    threshold: float = 0.5,
) -> LinearModel:
    states, targets = train
    if states.shape[0] == 0:
        raise EmptySplit("cannot train on an empty split")
    if epochs < 1 or learning_rate < 0:
        raise ValidationError("epochs must be >= 1 and learning_rate >= 0")

    n, width = states.shape
    n_actions = targets.shape[1]
    weights = np.zeros((width, n_actions), dtype=np.float64)
    bias = np.zeros(n_actions, dtype=np.float64)
    shuffler = np.random.default_rng(seed)

    history = []
    for _ in range(epochs):
        order = shuffler.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, batch_size):
            sel = order[start : start + batch_size]
            loss, gw, gb = logistic_loss_and_grad(
                weights, bias, states[sel], targets[sel], l2
            )
            if not np.isfinite(loss):
                raise DivergenceError(f"loss became non-finite ({loss})")
            weights -= learning_rate * gw
            bias -= learning_rate * gb
            epoch_loss += loss
            batches += 1
        history.append(epoch_loss / batches)

    return LinearModel(weights=weights, bias=bias, threshold=threshold, loss_history=history)


def predict(model: Model, states: np.ndarray) -> np.ndarray:
    """Predict target vectors for one state or a batch of states."""
    single = states.ndim == 1
    batch = states.reshape(1, -1) if single else states
    if batch.shape[1] != model.state_width:
        raise WidthMismatch(f"state width {batch.shape[1]} != {model.state_width}")
    if isinstance(model, MemorizerModel):
        out = np.stack([model.predict_one(row) for row in batch])
    else:
        scores = model.scores(batch)
        out = (scores >= model.threshold).astype(np.uint8)
        empty = ~out.any(axis=1)
        if empty.any():
            out[empty, np.argmax(scores[empty], axis=1)] = 1
    return out[0] if single else out


def train_model(kind: str, train_split: tuple[np.ndarray, np.ndarray], seed: int = 0) -> Model:
    if kind == "memorizer":
        return train_memorizer(train_split)
    if kind == "linear":
        return train_linear(train_split, seed=seed)
    raise ValidationError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Robustness sweep


@dataclass
class SweepRow:
    error_rate: float
    model: str
    report: MetricsReport
    seed: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    manifest: dict

    def mean_f1(self, model: str) -> list[tuple[float, float]]:
        """Per-rate mean micro-F1 for one model, in rate order."""
        rates: dict[float, list[float]] = {}
        for row in self.rows:
            if row.model == model:
                rates.setdefault(row.error_rate, []).append(row.report.micro_f1)
        return [(rate, float(np.mean(v))) for rate, v in sorted(rates.items())]


def robustness_sweep(
    ontology: Ontology,
    gen_cfg: GeneratorConfig,
    error_rates: list[float],
    models: list[str],
    seed: int = 0,
    n_seeds: int = 3,
    mode_weights: tuple[float, float] = (0.5, 0.5),
    base_dataset: Optional[Dataset] = None,
) -> SweepResult:
    """Inject increasing error rates into one clean dataset and score each
    model on the perturbed train/test splits."""
    if any(not 0.0 <= r <= 1.0 for r in error_rates):
        raise ValidationError("error rates must lie in [0, 1]")
    if any(b <= a for a, b in zip(error_rates, error_rates[1:])):
        raise ValidationError("error rates must be strictly increasing")
    for kind in models:
        if kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {kind!r}")

    clean = base_dataset if base_dataset is not None else generate_dataset(ontology, gen_cfg)

    rows: list[SweepRow] = []
    for rate_index, rate in enumerate(error_rates):
        for k in range(n_seeds):
            inj_seed = derive_seed(seed, rate_index * 1009 + k)
            err_cfg = ErrorConfig(
                p_intent=rate, p_action=rate, p_slot=rate,
                mode_weights=mode_weights, seed=inj_seed,
            )
            perturbed, _ = inject_errors(clean, ontology, err_cfg)
            encoded = encode_dataset(perturbed, ontology)
            for kind in models:
                model = train_model(kind, encoded.splits["train"], seed=inj_seed)
                preds = predict(model, encoded.splits["test"][0])
                report = compute_metrics(preds, encoded.splits["test"][1])
                rows.append(SweepRow(error_rate=rate, model=kind, report=report, seed=inj_seed))

    rows.sort(key=lambda r: (r.error_rate, r.model, r.seed))
    manifest = {
        "error_rates": list(error_rates),
        "models": list(models),
        "seed": seed,
        "n_seeds": n_seeds,
        "mode_weights": list(mode_weights),
        "noise_applied_to": "all splits",
        "generator_config": gen_cfg.to_dict(),
        "ontology_hash": ontology.content_hash(),
    }
    return SweepResult(rows=rows, manifest=manifest)


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rate", "model", "micro_f1", "micro_p", "micro_r", "macro_f1", "seed"])
        for row in result.rows:
            r = row.report
            writer.writerow(
                [
                    f"{row.error_rate:g}",
                    row.model,
                    f"{r.micro_f1:.6f}",
                    f"{r.micro_precision:.6f}",
                    f"{r.micro_recall:.6f}",
                    f"{r.macro_f1:.6f}",
                    row.seed,
                ]
            )


def write_sweep_long(result: SweepResult, path) -> None:
    """Long-format export (one metric per line) for plotting tools."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rate", "model", "seed", "metric", "value"])
        for row in result.rows:
            r = row.report
            for name, value in (
                ("micro_f1", r.micro_f1),
                ("micro_p", r.micro_precision),
                ("micro_r", r.micro_recall),
                ("macro_f1", r.macro_f1),
                ("macro_p", r.macro_precision),
                ("macro_r", r.macro_recall),
            ):
                writer.writerow([f"{row.error_rate:g}", row.model, row.seed, name, f"{value:.6f}"])


def linear_fit_r2(points: list[tuple[float, float]]) -> float:
    """Coefficient of determination of the least-squares line through points."""
    x = np.array([p[0] for p in points], dtype=np.float64)
    y = np.array([p[1] for p in points], dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
