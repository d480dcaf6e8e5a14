"""Threshold- and classifier-based attack models plus the mixing-ratio
training-set builder, voice-number-dependent model banks, and the t-test
procedure bounding the useful number of inference voices."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from hashlib import sha256

import numpy as np
from scipy import stats as scipy_stats

from .errors import EmptyInputError, TrainingError
from .features import FEATURE_NAMES, FeatureRow


@dataclass(frozen=True)
class ThresholdModel:
    """Decide member iff the value of one feature exceeds tau."""

    feature_id: str
    tau: float

    def decide(self, value: float) -> int:
        return int(value > self.tau)


def fit_threshold(member_values, non_member_values) -> tuple[float, float]:
    """Accuracy-maximizing threshold; returns (tau, accuracy).

    Candidates are the midpoints of adjacent sorted unique values plus the
    two infinities; ties go to the smallest tau.
    """
    members = np.asarray(member_values, dtype=np.float64)
    non_members = np.asarray(non_member_values, dtype=np.float64)
    if members.size == 0 or non_members.size == 0:
        raise EmptyInputError("fit_threshold needs values on both sides")
    unique = np.unique(np.concatenate([members, non_members]))
    candidates = np.concatenate([[-np.inf], (unique[:-1] + unique[1:]) / 2, [np.inf]])
    total = members.size + non_members.size
    best_tau, best_acc = -np.inf, -1.0
    for tau in candidates:
        correct = int(np.sum(members > tau)) + int(np.sum(non_members <= tau))
        acc = correct / total
        if acc > best_acc:
            best_tau, best_acc = float(tau), acc
    return best_tau, best_acc


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden: int = 64
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise EmptyInputError("repeats must be >= 1")


@dataclass
class MixingDataset:
    """Feature rows labeled member/non-member under the mixing-ratio strategy.

    Each shadow-training speaker contributes two member rows (its r=1 and
    r=0 feature vectors); each shadow-non-training speaker one non-member
    row, weighted 2.0 so the class weights balance.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    source_r: np.ndarray


def build_mixing_dataset(member_r1: list[FeatureRow], member_r0: list[FeatureRow],
                         non_member: list[FeatureRow]) -> MixingDataset:
    r1_by_speaker = {row.speaker_id: row for row in member_r1}
    r0_by_speaker = {row.speaker_id: row for row in member_r0}
    if set(r1_by_speaker) != set(r0_by_speaker):
        missing = set(r1_by_speaker) ^ set(r0_by_speaker)
        raise TrainingError(f"shadow-train speakers missing an r row: {sorted(missing)[:5]}")
    rows = []
    for sid in sorted(r1_by_speaker):
        rows.append((r1_by_speaker[sid].features, 1, 1.0, 1.0))
        rows.append((r0_by_speaker[sid].features, 1, 1.0, 0.0))
    for row in non_member:
        rows.append((row.features, 0, 2.0, 0.0))
    if not rows:
        raise TrainingError("no feature rows to train on")
    dim = rows[0][0].size
    if any(r[0].size != dim for r in rows):
        raise TrainingError("mismatched feature vector lengths")
    x = np.stack([r[0] for r in rows])
    return MixingDataset(
        x=x,
        y=np.array([r[1] for r in rows], dtype=np.float64),
        weights=np.array([r[2] for r in rows]),
        source_r=np.array([r[3] for r in rows]),
    )


def dataset_from_rows(members: list[FeatureRow], non_members: list[FeatureRow]) -> MixingDataset:
    """Plain (non-mixing) dataset: one row per speaker, unit weights."""
    rows = [(r.features, 1) for r in members] + [(r.features, 0) for r in non_members]
    if not rows:
        raise TrainingError("no feature rows to train on")
    x = np.stack([r[0] for r in rows])
    y = np.array([r[1] for r in rows], dtype=np.float64)
    return MixingDataset(x=x, y=y, weights=np.ones(len(rows)), source_r=np.full(len(rows), np.nan))


def feature_order_hash() -> str:
    return sha256("\n".join(FEATURE_NAMES).encode()).hexdigest()[:16]


@dataclass
class ClassifierModel:
    """One-hidden-layer MLP (rectifier hidden, logistic output) over
    standardized features."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    mean: np.ndarray
    std: np.ndarray

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.w1.shape[0]:
            raise EmptyInputError(
                f"feature vector length {x.shape[1]} != model input {self.w1.shape[0]}"
            )
        z = (x - self.mean) / self.std
        h = np.maximum(z @ self.w1 + self.b1, 0.0)
        logits = h @ self.w2 + self.b2
        return 1.0 / (1.0 + np.exp(-logits))

    def predict(self, features: np.ndarray) -> tuple[float, int]:
        p = float(self.predict_proba(features)[0])
        return p, int(p > 0.5)

    def to_json(self) -> dict:
        return {
            "type": "classifier",
            "feature_order_hash": feature_order_hash(),
            "standardization": {"mean": self.mean.tolist(), "std": self.std.tolist()},
            "layers": [
                {"rows": self.w1.shape[0], "cols": self.w1.shape[1],
                 "weights": self.w1.reshape(-1).tolist(), "bias": self.b1.tolist()},
                {"rows": self.w2.shape[0], "cols": 1,
                 "weights": self.w2.tolist(), "bias": [self.b2]},
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ClassifierModel":
        l1, l2 = d["layers"]
        return cls(
            w1=np.array(l1["weights"]).reshape(l1["rows"], l1["cols"]),
            b1=np.array(l1["bias"]),
            w2=np.array(l2["weights"]),
            b2=float(l2["bias"][0]),
            mean=np.array(d["standardization"]["mean"]),
            std=np.array(d["standardization"]["std"]),
        )


def _init_layer(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _loss_and_grads(params, z, y, weights):
    """Weighted binary cross-entropy and its analytic gradients."""
    w1, b1, w2, b2 = params
    a1 = z @ w1 + b1
    h = np.maximum(a1, 0.0)
    logits = h @ w2 + b2
    p = 1.0 / (1.0 + np.exp(-logits))
    eps = 1e-12
    losses = -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
    total_weight = weights.sum()
    loss = float((weights * losses).sum() / total_weight)

    dlogits = weights * (p - y) / total_weight
    gw2 = h.T @ dlogits
    gb2 = float(dlogits.sum())
    dh = np.outer(dlogits, w2)
    da1 = dh * (a1 > 0.0)
    gw1 = z.T @ da1
    gb1 = da1.sum(axis=0)
    return loss, (gw1, gb1, gw2, gb2)


def train_classifier(dataset: MixingDataset, config: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Full-batch Adam on weighted binary cross-entropy; deterministic per seed."""
    y = dataset.y
    if dataset.x.shape[0] < 4 or np.sum(y == 1) < 2 or np.sum(y == 0) < 2:
        raise TrainingError("need at least 2 rows per class")
    mean = dataset.x.mean(axis=0)
    std = dataset.x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    z = (dataset.x - mean) / std

    rng = np.random.default_rng(config.seed)
    dim = z.shape[1]
    w1 = _init_layer(rng, dim, config.hidden)
    b1 = np.zeros(config.hidden)
    w2 = _init_layer(rng, config.hidden, 1)[:, 0]
    b2 = 0.0
    params = [w1, b1, w2, b2]

    m = [np.zeros_like(w1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    v = [np.zeros_like(w1), np.zeros_like(b1), np.zeros_like(w2), 0.0]
    for step in range(1, config.epochs + 1):
        _, grads = _loss_and_grads(params, z, y, dataset.weights)
        bc1 = 1.0 - config.beta1 ** step
        bc2 = 1.0 - config.beta2 ** step
        for i in range(4):
            m[i] = config.beta1 * m[i] + (1 - config.beta1) * grads[i]
            v[i] = config.beta2 * v[i] + (1 - config.beta2) * np.square(grads[i])
            update = config.learning_rate * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + config.eps)
            params[i] = params[i] - update
    return ClassifierModel(w1=params[0], b1=params[1], w2=params[2], b2=float(params[3]),
                           mean=mean, std=std)


def train_ensemble(dataset: MixingDataset, config: TrainConfig = TrainConfig()) -> list[ClassifierModel]:
    """`repeats` independently seeded trainings; metric reports average over them."""
    return [
        train_classifier(dataset, TrainConfig(
            learning_rate=config.learning_rate, epochs=config.epochs,
            beta1=config.beta1, beta2=config.beta2, eps=config.eps,
            hidden=config.hidden, repeats=1, seed=config.seed + 1000 * rep,
        ))
        for rep in range(config.repeats)
    ]


@dataclass
class ModelBank:
    """Voice-number-dependent models indexed by inference voice count."""

    models: dict[int, ClassifierModel]
    bound: int  # N'

    def model_for(self, n: int) -> ClassifierModel:
        key = min(n, self.bound)
        if key not in self.models:
            raise EmptyInputError(f"no model for voice count {key}")
        return self.models[key]


def bank_infer(bank: ModelBank, voices, feature_fn) -> tuple[float, int]:
    """Infer with the bank: discard down to N' voices (smallest voice_id kept)."""
    if len(voices) < 2:
        raise EmptyInputError("bank inference needs N >= 2 voices")
    kept = sorted(voices, key=lambda v: v.voice_id)[: bank.bound]
    model = bank.model_for(len(kept))
    return model.predict(feature_fn(kept))


def welch_p_value(a, b) -> float:
    """Two-sided Welch t-test p-value; equal-mean zero-variance pairs accept."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.std() == 0.0 and b.std() == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    return float(scipy_stats.ttest_ind(a, b, equal_var=False).pvalue)


def bound_from_sampler(sampler, step: int, alpha: float = 0.05, max_n: int = 200) -> int:
    """Smallest n with no mean shift between n and n+step voices.

    `sampler(n)` returns the per-speaker feature samples computed with n
    voices each; the scan stops at the first n where Welch's t-test accepts
    equal means at level alpha.
    """
    if step < 1:
        raise EmptyInputError("step must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise EmptyInputError("alpha must lie in (0, 1)")
    n = 1
    tested = False
    while n <= max_n:
        try:
            d1 = sampler(n)
            d2 = sampler(n + step)
        except EmptyInputError:
            # too few voices at this count: skip it and keep scanning
            n += 1
            continue
        tested = True
        if welch_p_value(d1, d2) >= alpha:
            return n
        n += 1
    if not tested:
        raise EmptyInputError(f"no voice count up to {max_n} was computable")
    raise TrainingError(f"no stable voice count found up to {max_n}")


def bound_voice_count(feature_samplers: dict, step: int, alpha: float = 0.05,
                      max_n: int = 200) -> int:
    """Alg-style upper bound: maximum accepted n over feature x dataset pairs.

    `feature_samplers` maps (feature, dataset) names to sampler callables;
    pairs whose sampler raises EmptyInputError (too few voices) are skipped.
    """
    accepted = []
    for key in sorted(feature_samplers):
        try:
            accepted.append(bound_from_sampler(feature_samplers[key], step, alpha, max_n))
        except EmptyInputError:
            continue
    if not accepted:
        raise TrainingError("every feature/dataset pair was skipped")
    return max(accepted)


def save_models(path, models: dict):
    """Persist threshold models and classifier banks as one JSON document."""
    doc = {}
    for name, model in models.items():
        if isinstance(model, ThresholdModel):
            doc[name] = {"type": "threshold", "feature_order_hash": feature_order_hash(),
                         "feature_id": model.feature_id, "tau": model.tau}
        elif isinstance(model, ClassifierModel):
            doc[name] = model.to_json()
        elif isinstance(model, ModelBank):
            doc[name] = {"type": "bank", "bound": model.bound,
                         "models": {str(n): m.to_json() for n, m in model.models.items()}}
        else:
            raise TrainingError(f"unsupported model type {type(model)}")
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_models(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    out = {}
    for name, d in doc.items():
        if d["type"] == "threshold":
            out[name] = ThresholdModel(feature_id=d["feature_id"], tau=d["tau"])
        elif d["type"] == "classifier":
            out[name] = ClassifierModel.from_json(d)
        else:
            out[name] = ModelBank(
                models={int(n): ClassifierModel.from_json(m) for n, m in d["models"].items()},
                bound=d["bound"],
            )
    return out
