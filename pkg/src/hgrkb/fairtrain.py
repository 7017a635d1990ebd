"""Desk-scale constrained training with an HGR penalty and a Lagrangian dual multiplier.

The network is a plain fully-connected ReLU model written in numpy with
hand-derived backpropagation, trained full-batch with Adam.  The penalty is
``lam * max(0, HGR(z, yhat) - tau)``; its gradient w.r.t. the predictions comes
from the envelope subgradients in :mod:`hgrkb.gradients`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import r2_score, roc_auc_score
from sklearn.model_selection import KFold

from hgrkb.correlation import DegreeConfig, SolverConfig, hgr_kb, hgr_sk
from hgrkb.errors import EmptyDataset, HgrError, MissingColumn, NonNumericValue, ZeroVariance
from hgrkb.gradients import hgr_kb_subgradient, hgr_sk_gradient

PENALIZERS = ("hgr_kb", "hgr_sk", "none")
TASKS = ("regression", "binary")


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    features: np.ndarray
    target: np.ndarray
    protected: np.ndarray
    column_kinds: dict
    feature_names: list = field(default_factory=list)
    task: str = "regression"

    def __len__(self):
        return self.target.size

    def subset(self, idx) -> "Dataset":
        return replace(self, features=self.features[idx], target=self.target[idx], protected=self.protected[idx])


@dataclass(frozen=True)
class Schema:
    target: str
    protected: str
    categorical: tuple = ()
    drop: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse ``target=NAME,protected=NAME,categorical=NAME,...``; ``categorical`` and ``drop`` may repeat."""
        fields = {"categorical": [], "drop": []}
        for item in filter(None, (p.strip() for p in text.split(","))):
            if "=" not in item:
                raise HgrError(f"malformed schema entry {item!r}")
            key, val = (s.strip() for s in item.split("=", 1))
            if key in ("categorical", "drop"):
                fields[key].append(val)
            elif key in ("target", "protected"):
                fields[key] = val
            else:
                raise HgrError(f"unknown schema key {key!r}")
        if "target" not in fields or "protected" not in fields:
            raise HgrError("schema must name target and protected columns")
        return cls(fields["target"], fields["protected"], tuple(fields["categorical"]), tuple(fields["drop"]))


def _normalize_target(y: pd.Series):
    values = pd.to_numeric(y, errors="coerce")
    levels = pd.unique(y)
    if len(levels) == 2:
        lo, hi = sorted(levels, key=lambda v: (str(type(v)), v))
        return (y == hi).to_numpy(dtype=np.float64), "binary"
    if values.isna().any():
        raise NonNumericValue(f"target column {y.name!r} is not numeric")
    v = values.to_numpy(dtype=np.float64)
    span = v.max() - v.min()
    if span == 0:
        raise ZeroVariance(f"target column {y.name!r} is constant")
    return (v - v.min()) / span, "regression"


def preprocess(frame: pd.DataFrame, schema: Schema) -> Dataset:
    """Normalize the target, standardize continuous inputs, one-hot encode categorical ones."""
    if frame.empty:
        raise EmptyDataset("dataset has no rows")
    for col in (schema.target, schema.protected, *schema.categorical, *schema.drop):
        if col not in frame.columns:
            raise MissingColumn(f"column {col!r} not found")
    y, task = _normalize_target(frame[schema.target])
    z = pd.to_numeric(frame[schema.protected], errors="coerce")
    if z.isna().any():
        raise NonNumericValue(f"protected column {schema.protected!r} is not numeric")
    blocks, names, kinds = [], [], {}
    for col in frame.columns:
        if col == schema.target or col in schema.drop:
            continue
        if col in schema.categorical:
            dummies = pd.get_dummies(frame[col].astype(str), prefix=col, prefix_sep="=", dtype=np.float64)
            blocks.append(dummies.to_numpy())
            names.extend(dummies.columns)
            kinds[col] = "categorical"
        else:
            v = pd.to_numeric(frame[col], errors="coerce")
            if v.isna().any():
                raise NonNumericValue(f"column {col!r} has non-numeric values")
            v = v.to_numpy(dtype=np.float64)
            sd = v.std()
            blocks.append(((v - v.mean()) / (sd if sd > 0 else 1.0))[:, None])
            names.append(col)
            kinds[col] = "continuous"
    X = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    return Dataset(X, y, z.to_numpy(dtype=np.float64), kinds, names, task)


def load_csv(path, schema) -> Dataset:
    if isinstance(schema, str):
        schema = Schema.parse(schema)
    frame = pd.read_csv(path)
    return preprocess(frame, schema)


def fairness_dataset(n: int = 2000, seed: int = 0) -> Dataset:
    """Synthetic regression task whose target depends quadratically on the protected input."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, n)
    x1, x2 = rng.standard_normal(n), rng.standard_normal(n)
    y = 3.0 * z**2 + x1 + 0.5 * x2 + 0.3 * rng.standard_normal(n)
    frame = pd.DataFrame({"z": z, "x1": x1, "x2": x2, "y": y})
    return preprocess(frame, Schema("y", "z"))


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

@dataclass
class ModelState:
    weights: list
    biases: list
    output: str = "identity"

    @classmethod
    def init(cls, n_in: int, hidden: Sequence[int], seed: int, output: str = "identity") -> "ModelState":
        rng = np.random.default_rng(seed)
        sizes = [n_in, *hidden, 1]
        W = [rng.standard_normal((i, o)) * np.sqrt(2.0 / i) for i, o in zip(sizes[:-1], sizes[1:])]
        b = [np.zeros(o) for o in sizes[1:]]
        return cls(W, b, output)

    def params(self):
        return [*self.weights, *self.biases]

    def forward(self, X: np.ndarray):
        acts = [X]
        h = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
            acts.append(h)
        out = (h @ self.weights[-1] + self.biases[-1]).ravel()
        return out, acts

    def predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = self.forward(X)
        return _sigmoid(out) if self.output == "logistic" else out

    def backward(self, acts, grad_out: np.ndarray):
        """Parameter gradients given dLoss/d(pre-output)."""
        gW, gb = [None] * len(self.weights), [None] * len(self.biases)
        delta = grad_out[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            gW[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return [*gW, *gb]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grads, ascend=False):
        """In-place update of numpy arrays; returns the list of updated params."""
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1, c2 = 1 - self.beta1**self.t, 1 - self.beta2**self.t
        sign = 1.0 if ascend else -1.0
        out = []
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p = p + sign * self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            out.append(p)
        return out


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    tau: float = 0.3
    penalizer: str = "hgr_kb"
    degrees: tuple = (5, 5)
    degree: int = 5
    primal_lr: float = 1e-3
    dual_lr: float = 1e-3
    dual_optimizer: str = "adam"
    epochs: int = 500
    hidden: tuple = (32, 32)
    seed: int = 0
    task: Optional[str] = None
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.primal_lr <= 0 or self.dual_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.penalizer not in PENALIZERS:
            raise ValueError(f"penalizer must be one of {PENALIZERS}")
        if self.dual_optimizer not in ("adam", "sgd"):
            raise ValueError("dual_optimizer must be 'adam' or 'sgd'")
        if self.task is not None and self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


@dataclass
class TrainRun:
    trajectory: list
    state: ModelState
    wall_time: float
    config: TrainConfig

    @property
    def lambdas(self):
        return [row["lambda"] for row in self.trajectory]

    def as_dict(self) -> dict:
        return {"trajectory": self.trajectory, "final_lambda": self.trajectory[-1]["lambda"]}


def indicator(z: np.ndarray, yhat: np.ndarray, cfg: TrainConfig, warm=None, with_grad=True):
    """HGR(z, yhat) and its subgradient w.r.t. yhat.

    Returns ``(value, grad, coefficients, degenerate)``.  A constant ``yhat``
    counts as zero correlation with a zero gradient.
    """
    if cfg.penalizer == "none":
        return 0.0, np.zeros_like(yhat), None, False
    solver = cfg.solver if warm is None else replace(cfg.solver, warm_start=warm)
    try:
        if cfg.penalizer == "hgr_kb":
            res = hgr_kb(z, yhat, DegreeConfig(*cfg.degrees), solver)
            grad = hgr_kb_subgradient(z, yhat, cfg.degrees, solver, result=res).gradient if with_grad else None
        else:
            res = hgr_sk(z, yhat, cfg.degree, solver)
            grad = hgr_sk_gradient(z, yhat, cfg.degree, solver, result=res).gradient if with_grad else None
    except ZeroVariance:
        return 0.0, np.zeros_like(yhat), None, True
    coefs = (res.alpha, res.beta) if cfg.penalizer == "hgr_kb" else None
    return res.value, grad, coefs, False


def _task_loss(out: np.ndarray, y: np.ndarray, task: str):
    """Task loss and its gradient w.r.t. the pre-output."""
    n = y.size
    if task == "binary":
        p = _sigmoid(out)
        eps = 1e-12
        loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        return float(loss), (p - y) / n
    resid = out - y
    return float(np.mean(resid**2)), 2.0 * resid / n


def penalized_loss(state: ModelState, X, y, z, lam: float, cfg: TrainConfig, task: str = "regression", warm=None):
    """Task loss plus ``lam * max(0, HGR(z, yhat) - tau)`` and its parameter gradient.

    Returns ``(loss, grads, info)``; ``info`` carries the indicator value,
    its coefficients (for warm starting) and the degenerate flag.
    """
    if lam < 0:
        raise ValueError("multiplier must be non-negative")
    out, acts = state.forward(X)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("network output is not finite")
    loss, g_out = _task_loss(out, y, task)
    yhat = _sigmoid(out) if task == "binary" else out
    value, grad, coefs, degenerate = indicator(z, yhat, cfg, warm, with_grad=lam > 0)
    violation = max(0.0, value - cfg.tau)
    if lam > 0 and value >= cfg.tau:
        loss = loss + lam * violation
        pen = lam * grad
        if task == "binary":
            pen = pen * yhat * (1 - yhat)
        g_out = g_out + pen
    grads = state.backward(acts, g_out)
    info = {"constraint": value, "coefficients": coefs, "degenerate": degenerate, "yhat": yhat}
    return loss, grads, info


def score(y: np.ndarray, yhat: np.ndarray, task: str) -> float:
    if task == "binary":
        return float(roc_auc_score(y, yhat))
    return float(r2_score(y, yhat))


def train(dataset: Dataset, cfg: TrainConfig = TrainConfig()) -> TrainRun:
    task = cfg.task or dataset.task
    state = ModelState.init(dataset.features.shape[1], cfg.hidden, cfg.seed, "logistic" if task == "binary" else "identity")
    primal = Adam(cfg.primal_lr)
    dual = Adam(cfg.dual_lr)
    lam = np.zeros(1)
    warm = None
    X, y, z = dataset.features, dataset.target, dataset.protected
    trajectory = []
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        loss, grads, info = penalized_loss(state, X, y, z, float(lam[0]), cfg, task, warm)
        warm = info["coefficients"]
        params = primal.step(state.params(), grads)
        k = len(state.weights)
        state.weights, state.biases = params[:k], params[k:]
        if not all(np.all(np.isfinite(p)) for p in params):
            raise FloatingPointError(f"non-finite parameters after epoch {epoch}")
        violation = max(0.0, info["constraint"] - cfg.tau) if cfg.penalizer != "none" else 0.0
        if cfg.dual_optimizer == "adam":
            (lam,) = dual.step([lam], [np.array([violation])], ascend=True)
        else:
            lam = lam + cfg.dual_lr * violation
        lam = np.maximum(lam, 0.0)
        trajectory.append({
            "epoch": epoch,
            "loss": loss,
            "score": score(y, info["yhat"], task),
            "constraint": info["constraint"],
            "degenerate": info["degenerate"],
            "lambda": float(lam[0]),
        })
    return TrainRun(trajectory, state, time.perf_counter() - t0, cfg)


def evaluate(state: ModelState, dataset: Dataset, deg=(5, 5), d: int = 5) -> dict:
    """Score plus both HGR indicators between the protected input and the predictions."""
    task = "binary" if state.output == "logistic" else "regression"
    yhat = state.predict(dataset.features)
    out = {"score": score(dataset.target, yhat, task), "degenerate": False}
    try:
        out["hgr_kb"] = hgr_kb(dataset.protected, yhat, deg).value
        out["hgr_sk"] = hgr_sk(dataset.protected, yhat, d).value
    except ZeroVariance:
        out.update(hgr_kb=0.0, hgr_sk=0.0, degenerate=True)
    return out


def _mean_std(values):
    v = np.asarray(values, dtype=np.float64)
    return {"mean": float(v.mean()), "std": float(v.std())}


def cross_validate(dataset: Dataset, cfg: TrainConfig = TrainConfig(), folds: int = 5) -> dict:
    """K-fold protocol: train per fold, then report train/val score and constraints with mean and std."""
    kf = KFold(n_splits=folds, shuffle=True, random_state=cfg.seed)
    rows = []
    for fold, (tr, va) in enumerate(kf.split(dataset.features)):
        run = train(dataset.subset(tr), cfg)
        ev_tr = evaluate(run.state, dataset.subset(tr), cfg.degrees, cfg.degree)
        ev_va = evaluate(run.state, dataset.subset(va), cfg.degrees, cfg.degree)
        rows.append({
            "fold": fold,
            "train": ev_tr,
            "val": ev_va,
            "time": run.wall_time,
            "min_lambda": float(min(run.lambdas)),
            "final_lambda": run.lambdas[-1],
        })
    summary = {}
    for split in ("train", "val"):
        for key in ("score", "hgr_kb", "hgr_sk"):
            summary[f"{key}_{split}"] = _mean_std([r[split][key] for r in rows])
    summary["time"] = _mean_std([r["time"] for r in rows])
    return {"folds": rows, "summary": summary}
