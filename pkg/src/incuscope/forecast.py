"""Sustainability forecaster: an LSTM sequence classifier over monthly
socio-technical feature vectors.

Architecture: one LSTM layer (64 units by default) with inverted dropout
(rate 0.3) on its output, then a dense layer with softmax over the two
outcomes (index 0 = retired, index 1 = graduated).  The per-step softmax
at month t uses only months 1..t, so the forecast for a month never
depends on later activity.

Everything is plain numpy, double precision, and deterministic per seed:
initialization and dropout draw from counter-based Philox streams keyed by
(seed, purpose), and training is full-batch, so reruns with the same seed
reproduce parameters bit for bit.  Gradients are computed analytically by
backpropagation through time; tests check them against central finite
differences.

Loss: the sequence label is broadcast to every time step and the per-step
cross-entropies are averaged over time, then over the batch.  This trains
calibrated month-by-month forecasts rather than a single end-of-sequence
verdict.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOWNTURN = "downturn"
UPTURN = "upturn"

DEFAULT_TURN_THRESHOLD = 0.1

GATE_PARAM_NAMES = ("w_i", "w_f", "w_g", "w_o")
BIAS_PARAM_NAMES = ("b_i", "b_f", "b_g", "b_o")
PARAM_NAMES = GATE_PARAM_NAMES + BIAS_PARAM_NAMES + ("w_out", "b_out")

# std floor for feature z-scoring; constant features would otherwise
# divide by zero
STD_FLOOR = 1e-8

CHECKPOINT_SCHEMA = 1


@dataclass
class ForecastModel:
    """All learnable parameters plus the feature normalization stats.

    Gate weight matrices are (hidden, input + hidden) and act on the
    concatenation [x_t; h_{t-1}]; the dense head is (2, hidden).
    """

    input_dim: int
    hidden_dim: int
    dropout_rate: float
    params: dict[str, np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    seed: int


@dataclass(frozen=True)
class LabeledSequence:
    """A project's (months, features) matrix with its outcome label:
    1 = graduated, 0 = retired."""

    features: np.ndarray
    label: int
    project_id: str = ""


@dataclass(frozen=True)
class ForecastSeries:
    project_id: str
    probabilities: list[float]


@dataclass(frozen=True)
class TurnEvent:
    month: int
    kind: str
    delta: float


@dataclass(frozen=True)
class TrainConfig:
    hidden_dim: int = 64
    dropout_rate: float = 0.3
    epochs: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 5.0


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


def _mix_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def init_model(
    input_dim: int,
    hidden_dim: int,
    dropout_rate: float,
    seed: int,
    feature_mean: np.ndarray | None = None,
    feature_std: np.ndarray | None = None,
) -> ForecastModel:
    """Glorot-uniform weights, zero biases except the forget gate bias at
    1.0 (keeps early memory from vanishing)."""
    rng = _rng(seed, 0)

    def glorot(rows: int, cols: int) -> np.ndarray:
        s = math.sqrt(6.0 / (rows + cols))
        return rng.uniform(-s, s, size=(rows, cols))

    z = input_dim + hidden_dim
    params: dict[str, np.ndarray] = {}
    for name in GATE_PARAM_NAMES:
        params[name] = glorot(hidden_dim, z)
    for name in BIAS_PARAM_NAMES:
        params[name] = np.zeros(hidden_dim)
    params["b_f"] = np.ones(hidden_dim)
    params["w_out"] = glorot(2, hidden_dim)
    params["b_out"] = np.zeros(2)
    if feature_mean is None:
        feature_mean = np.zeros(input_dim)
    if feature_std is None:
        feature_std = np.ones(input_dim)
    return ForecastModel(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        dropout_rate=dropout_rate,
        params=params,
        feature_mean=np.asarray(feature_mean, dtype=np.float64),
        feature_std=np.asarray(feature_std, dtype=np.float64),
        seed=seed,
    )


def lstm_cell_step(
    params: dict[str, np.ndarray],
    x: np.ndarray,
    h: np.ndarray,
    c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One LSTM cell update on an already-normalized input.

    i, f, o = sigmoid(W [x;h] + b), g = tanh(W_g [x;h] + b_g),
    c' = f * c + i * g, h' = o * tanh(c').
    """
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
        raise ValueError("non-finite input to lstm_cell_step")
    z = np.concatenate([x, h])
    i = _sigmoid(params["w_i"] @ z + params["b_i"])
    f = _sigmoid(params["w_f"] @ z + params["b_f"])
    g = np.tanh(params["w_g"] @ z + params["b_g"])
    o = _sigmoid(params["w_o"] @ z + params["b_o"])
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, c_new


def _stack_gates(params: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    w = np.concatenate([params[n] for n in GATE_PARAM_NAMES], axis=0)
    b = np.concatenate([params[n] for n in BIAS_PARAM_NAMES])
    return w, b


def _dropout_masks(
    hidden_dim: int, steps: int, rate: float, seed_key: tuple[int, ...] | None
) -> np.ndarray | None:
    """Inverted-dropout scale masks, one row per time step, or None in
    eval mode."""
    if seed_key is None or rate <= 0.0:
        return None
    rng = _rng(*seed_key)
    keep = 1.0 - rate
    return (rng.random((steps, hidden_dim)) < keep).astype(np.float64) / keep


def _forward_cached(
    model: ForecastModel, features: np.ndarray, masks: np.ndarray | None
) -> tuple[np.ndarray, dict]:
    """Unrolled forward pass returning per-step probabilities and the
    intermediate values backpropagation needs."""
    xs = np.asarray(features, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0 or xs.shape[1] != model.input_dim:
        raise ValueError(
            f"expected a non-empty (months, {model.input_dim}) feature matrix, "
            f"got shape {xs.shape}"
        )
    if not np.all(np.isfinite(xs)):
        raise ValueError("non-finite feature values")
    xs = (xs - model.feature_mean) / model.feature_std
    steps = xs.shape[0]
    hid = model.hidden_dim
    w_all, b_all = _stack_gates(model.params)
    w_out, b_out = model.params["w_out"], model.params["b_out"]

    h = np.zeros(hid)
    c = np.zeros(hid)
    cache = {
        "xs": xs, "z": [], "i": [], "f": [], "g": [], "o": [],
        "c_prev": [], "tc": [], "hd": [], "masks": masks,
    }
    probs = np.empty((steps, 2))
    for t in range(steps):
        z = np.concatenate([xs[t], h])
        a = w_all @ z + b_all
        i = _sigmoid(a[:hid])
        f = _sigmoid(a[hid : 2 * hid])
        g = np.tanh(a[2 * hid : 3 * hid])
        o = _sigmoid(a[3 * hid :])
        c_prev = c
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        hd = h * masks[t] if masks is not None else h
        probs[t] = softmax(w_out @ hd + b_out)
        for name, value in (
            ("z", z), ("i", i), ("f", f), ("g", g), ("o", o),
            ("c_prev", c_prev), ("tc", tc), ("hd", hd),
        ):
            cache[name].append(value)
    return probs, cache


def forward(
    model: ForecastModel,
    features: np.ndarray,
    mode: str = "eval",
    dropout_seed: int | None = None,
) -> np.ndarray:
    """Per-step (p_retired, p_graduated) pairs for a feature sequence.

    Raw (unnormalized) features are expected; the model's stored stats are
    applied internally.  ``mode="train"`` applies inverted dropout with
    masks drawn deterministically from ``dropout_seed``.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    masks = None
    if mode == "train":
        if dropout_seed is None and model.dropout_rate > 0.0:
            raise ValueError("train mode requires a dropout_seed")
        xs = np.asarray(features, dtype=np.float64)
        masks = _dropout_masks(
            model.hidden_dim,
            xs.shape[0] if xs.ndim == 2 else 0,
            model.dropout_rate,
            (dropout_seed, 0) if dropout_seed is not None else None,
        )
    probs, _ = _forward_cached(model, features, masks)
    return probs


def _zero_grads(model: ForecastModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in model.params.items()}


def loss_and_gradients(
    model: ForecastModel,
    batch: list[LabeledSequence],
    dropout_seed: int | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy (over time steps, then over sequences) with the
    label broadcast to every step, and its gradients via backpropagation
    through time.

    ``dropout_seed=None`` evaluates without dropout; an integer seed gives
    each sequence its own deterministic mask stream so the loss stays a
    fixed differentiable function of the parameters.
    """
    if not batch:
        raise ValueError("empty batch")
    hid = model.hidden_dim
    dim = model.input_dim
    w_all, _ = _stack_gates(model.params)
    w_out = model.params["w_out"]
    grads = _zero_grads(model)
    dw_all = np.zeros((4 * hid, dim + hid))
    db_all = np.zeros(4 * hid)
    total_loss = 0.0
    batch_scale = 1.0 / len(batch)

    for index, seq in enumerate(batch):
        masks = _dropout_masks(
            hid,
            np.asarray(seq.features).shape[0],
            model.dropout_rate,
            (dropout_seed, index) if dropout_seed is not None else None,
        )
        probs, cache = _forward_cached(model, seq.features, masks)
        steps = probs.shape[0]
        label = int(seq.label)
        # stable mean over time of -log p[label]
        total_loss += batch_scale * float(
            -np.mean(np.log(probs[:, label]))
        )

        scale = batch_scale / steps
        dh_next = np.zeros(hid)
        dc_next = np.zeros(hid)
        for t in range(steps - 1, -1, -1):
            dlogits = probs[t].copy()
            dlogits[label] -= 1.0
            dlogits *= scale
            hd = cache["hd"][t]
            grads["w_out"] += np.outer(dlogits, hd)
            grads["b_out"] += dlogits
            dhd = w_out.T @ dlogits
            dh = (dhd * masks[t] if masks is not None else dhd) + dh_next
            i, f, g, o = cache["i"][t], cache["f"][t], cache["g"][t], cache["o"][t]
            tc = cache["tc"][t]
            c_prev = cache["c_prev"][t]
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            da = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ])
            z = cache["z"][t]
            dw_all += np.outer(da, z)
            db_all += da
            dh_next = (w_all.T @ da)[dim:]

    for k, name in enumerate(GATE_PARAM_NAMES):
        grads[name] = dw_all[k * hid : (k + 1) * hid]
    for k, name in enumerate(BIAS_PARAM_NAMES):
        grads[name] = db_all[k * hid : (k + 1) * hid]
    return total_loss, grads


def accuracy(model: ForecastModel, dataset: list[LabeledSequence]) -> float:
    """Fraction of sequences whose final-month prediction matches the
    label (eval mode)."""
    hits = 0
    for seq in dataset:
        probs = forward(model, seq.features)
        hits += int(np.argmax(probs[-1]) == seq.label)
    return hits / len(dataset)


def train(
    dataset: list[LabeledSequence],
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> tuple[ForecastModel, list[EpochStats]]:
    """Full-batch Adam training, deterministic per seed.

    Normalization stats come from the training set only.  Each history
    entry records the eval-mode loss and final-step accuracy measured
    after that epoch's update.  Refuses single-class datasets: a
    classifier cannot learn from one outcome.
    """
    if len(dataset) < 2:
        raise ValueError("training needs at least 2 labeled sequences")
    labels = {int(s.label) for s in dataset}
    if labels != {0, 1}:
        raise ValueError(
            f"training needs both outcomes present, got labels {sorted(labels)}"
        )
    stacked = np.concatenate([np.asarray(s.features, dtype=np.float64) for s in dataset])
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    model = init_model(
        input_dim=stacked.shape[1],
        hidden_dim=config.hidden_dim,
        dropout_rate=config.dropout_rate,
        seed=seed,
        feature_mean=mean,
        feature_std=std,
    )
    m_state = _zero_grads(model)
    v_state = _zero_grads(model)
    history: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        _, grads = loss_and_gradients(
            model, dataset, dropout_seed=_mix_seed(seed, 1, epoch)
        )
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        if config.clip_norm > 0 and norm > config.clip_norm:
            factor = config.clip_norm / norm
            grads = {k: g * factor for k, g in grads.items()}
        for name, p in model.params.items():
            g = grads[name]
            m_state[name] = config.beta1 * m_state[name] + (1 - config.beta1) * g
            v_state[name] = config.beta2 * v_state[name] + (1 - config.beta2) * g * g
            m_hat = m_state[name] / (1 - config.beta1**epoch)
            v_hat = v_state[name] / (1 - config.beta2**epoch)
            p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        eval_loss, _ = loss_and_gradients(model, dataset)
        history.append(EpochStats(epoch, eval_loss, accuracy(model, dataset)))
    return model, history


def forecast_series(
    model: ForecastModel, features: np.ndarray, project_id: str = ""
) -> ForecastSeries:
    """Graduation probability per month; month t uses features of months
    1..t only."""
    probs = forward(model, features)
    return ForecastSeries(project_id, [float(p) for p in probs[:, 1]])


def detect_turns(series, threshold: float = DEFAULT_TURN_THRESHOLD) -> list[TurnEvent]:
    """Month-over-month forecast changes at least ``threshold`` in size.

    For month t >= 2, delta = p[t] - p[t-1]; a drop of threshold or more is
    a downturn, a rise an upturn.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    probs = getattr(series, "probabilities", series)
    events: list[TurnEvent] = []
    for t in range(1, len(probs)):
        delta = probs[t] - probs[t - 1]
        if delta <= -threshold:
            events.append(TurnEvent(month=t + 1, kind=DOWNTURN, delta=delta))
        elif delta >= threshold:
            events.append(TurnEvent(month=t + 1, kind=UPTURN, delta=delta))
    return events


def save_model(model: ForecastModel, path: str | Path) -> None:
    """Write a versioned JSON checkpoint.  Floats keep full precision
    (shortest round-trip repr), so save/load is bit-exact."""
    doc = {
        "schema": CHECKPOINT_SCHEMA,
        "kind": "lstm-graduation-forecaster",
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "dropout_rate": model.dropout_rate,
        "seed": model.seed,
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "params": {name: model.params[name].tolist() for name in PARAM_NAMES},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> ForecastModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt checkpoint {path}: {exc}") from exc
    if doc.get("schema") != CHECKPOINT_SCHEMA:
        raise ValueError(
            f"checkpoint {path}: unsupported schema {doc.get('schema')!r}"
        )
    for key in ("input_dim", "hidden_dim", "dropout_rate", "seed", "params"):
        if key not in doc:
            raise ValueError(f"checkpoint {path}: missing field {key!r}")
    params = {}
    for name in PARAM_NAMES:
        if name not in doc["params"]:
            raise ValueError(f"checkpoint {path}: missing parameter {name!r}")
        params[name] = np.asarray(doc["params"][name], dtype=np.float64)
    hid, dim = doc["hidden_dim"], doc["input_dim"]
    if params["w_i"].shape != (hid, dim + hid) or params["w_out"].shape != (2, hid):
        raise ValueError(f"checkpoint {path}: parameter shapes inconsistent")
    return ForecastModel(
        input_dim=dim,
        hidden_dim=hid,
        dropout_rate=float(doc["dropout_rate"]),
        params=params,
        feature_mean=np.asarray(doc["feature_mean"], dtype=np.float64),
        feature_std=np.asarray(doc["feature_std"], dtype=np.float64),
        seed=int(doc["seed"]),
    )
