"""Small actor-critic MLP with hand-derived gradients.

Two tanh hidden layers feed a shared trunk; an action-logit head and a
scalar value head hang off the last hidden layer. Everything is float64 and
pure numpy: forward returns a cache, backward consumes it and returns exact
analytic gradients, and an adaptive-moment optimizer updates parameters in
place. Checkpoints are canonical JSON so identical training runs produce
byte-identical files.

Shapes follow the row-convention: observations are rows, weight matrices map
(fan_in, fan_out), so a batch pass is ``X @ W + b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import Rng

HIDDEN_SIZES = (64, 64)

ADAM_LR = 3e-4
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w_logits", "b_logits", "w_value", "b_value")


@dataclass
class Mlp:
    sizes: tuple[int, int, int, int]  # obs, hidden1, hidden2, actions
    params: dict[str, np.ndarray]

    @property
    def obs_size(self) -> int:
        return self.sizes[0]

    @property
    def n_actions(self) -> int:
        return self.sizes[3]


@dataclass
class OptimizerState:
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def mlp_init(seed: int, obs_size: int, n_actions: int) -> Mlp:
    """Scaled-uniform weight init (bound sqrt(6/(fan_in+fan_out))), zero
    biases; deterministic in the seed."""
    if obs_size < 1 or n_actions < 1:
        raise ValueError(f"bad sizes: obs={obs_size} actions={n_actions}")
    rng = Rng.for_purpose(seed, "init")
    h1, h2 = HIDDEN_SIZES

    def uniform_matrix(fan_in: int, fan_out: int) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        flat = [bound * (2.0 * rng.uniform() - 1.0) for _ in range(fan_in * fan_out)]
        return np.array(flat, dtype=np.float64).reshape(fan_in, fan_out)

    params = {
        "w1": uniform_matrix(obs_size, h1),
        "b1": np.zeros(h1),
        "w2": uniform_matrix(h1, h2),
        "b2": np.zeros(h2),
        "w_logits": uniform_matrix(h2, n_actions),
        "b_logits": np.zeros(n_actions),
        "w_value": uniform_matrix(h2, 1),
        "b_value": np.zeros(1),
    }
    return Mlp(sizes=(obs_size, h1, h2, n_actions), params=params)


def forward_batch(mlp: Mlp, obs: np.ndarray):
    """Batched pass: obs (B, n) -> (logits (B, A), values (B,), cache)."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[1] != mlp.obs_size:
        raise ValueError(f"expected (B, {mlp.obs_size}) observations, got {obs.shape}")
    p = mlp.params
    h1 = np.tanh(obs @ p["w1"] + p["b1"])
    h2 = np.tanh(h1 @ p["w2"] + p["b2"])
    logits = h2 @ p["w_logits"] + p["b_logits"]
    values = (h2 @ p["w_value"] + p["b_value"])[:, 0]
    return logits, values, (obs, h1, h2)


def forward(mlp: Mlp, obs: np.ndarray):
    """Single-observation pass: obs (n,) -> (logits (A,), value, cache)."""
    logits, values, cache = forward_batch(mlp, np.asarray(obs)[None, :])
    return logits[0], float(values[0]), cache


def backward_batch(mlp: Mlp, cache, dlogits: np.ndarray, dvalues: np.ndarray) -> dict:
    """Exact gradients of the cached pass, summed over the batch.

    dlogits (B, A) and dvalues (B,) are the loss gradients at the two heads;
    scale them by 1/B beforehand if the loss is a batch mean.
    """
    obs, h1, h2 = cache
    p = mlp.params
    dlogits = np.asarray(dlogits, dtype=np.float64)
    dvalues = np.asarray(dvalues, dtype=np.float64)
    if dlogits.shape != (obs.shape[0], mlp.n_actions) or dvalues.shape != (obs.shape[0],):
        raise ValueError(
            f"cotangent shapes {dlogits.shape}/{dvalues.shape} do not match batch"
        )
    grads = {
        "w_logits": h2.T @ dlogits,
        "b_logits": dlogits.sum(axis=0),
        "w_value": h2.T @ dvalues[:, None],
        "b_value": dvalues.sum(axis=0, keepdims=True)[:1],
    }
    dh2 = dlogits @ p["w_logits"].T + dvalues[:, None] @ p["w_value"].T
    dz2 = dh2 * (1.0 - h2 * h2)
    grads["w2"] = h1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dh1 = dz2 @ p["w2"].T
    dz1 = dh1 * (1.0 - h1 * h1)
    grads["w1"] = obs.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return grads


def backward(mlp: Mlp, cache, dlogits: np.ndarray, dvalue: float) -> dict:
    """Single-observation form of :func:`backward_batch`."""
    return backward_batch(
        mlp, cache, np.asarray(dlogits)[None, :], np.array([dvalue])
    )


# -- categorical head ---------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax (max subtraction); works on (A,) or (B, A)."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def log_prob(logits: np.ndarray, action: int) -> float:
    return float(log_softmax(logits)[action])


def entropy(logits: np.ndarray) -> float:
    logp = log_softmax(logits)
    return float(-(np.exp(logp) * logp).sum())


def categorical_sample(logits: np.ndarray, rng: Rng) -> tuple[int, float]:
    """Inverse-CDF sample from softmax(logits) using one uniform draw."""
    probs = softmax(logits)
    u = rng.uniform()
    cdf = 0.0
    for i, p in enumerate(probs):
        cdf += p
        if u < cdf:
            return i, log_prob(logits, i)
    i = len(probs) - 1  # numerical tail: cdf summed to slightly under 1
    return i, log_prob(logits, i)


# -- optimizer ----------------------------------------------------------------


def adam_init(mlp: Mlp, lr: float = ADAM_LR) -> OptimizerState:
    opt = OptimizerState(lr=lr)
    for name, p in mlp.params.items():
        opt.m[name] = np.zeros_like(p)
        opt.v[name] = np.zeros_like(p)
    return opt


def adam_step(mlp: Mlp, grads: dict, opt: OptimizerState) -> None:
    """One adaptive-moment update, in place, with bias correction."""
    if set(grads) != set(mlp.params):
        raise ValueError("gradient set does not cover the parameter set")
    opt.step += 1
    b1, b2 = opt.beta1, opt.beta2
    bias1 = 1.0 - b1 ** opt.step
    bias2 = 1.0 - b2 ** opt.step
    for name, p in mlp.params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        opt.m[name] = b1 * opt.m[name] + (1.0 - b1) * g
        opt.v[name] = b2 * opt.v[name] + (1.0 - b2) * g * g
        m_hat = opt.m[name] / bias1
        v_hat = opt.v[name] / bias2
        p -= opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)


# -- checkpoints --------------------------------------------------------------


def save_checkpoint(
    path: str | Path,
    mlp: Mlp,
    opt: OptimizerState | None = None,
    meta: dict | None = None,
) -> None:
    """Canonical-JSON checkpoint; identical state serializes byte-identically."""
    obj = {
        "kind": "balancekit-checkpoint",
        "schema_version": 1,
        "sizes": list(mlp.sizes),
        "params": {k: v.tolist() for k, v in mlp.params.items()},
        "meta": dict(sorted((meta or {}).items())),
    }
    if opt is not None:
        obj["optimizer"] = {
            "lr": opt.lr,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
            "step": opt.step,
            "m": {k: v.tolist() for k, v in opt.m.items()},
            "v": {k: v.tolist() for k, v in opt.v.items()},
        }
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path):
    """Returns (mlp, optimizer_state_or_none, meta)."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("kind") != "balancekit-checkpoint":
        raise ValueError(f"{path}: not a checkpoint file")
    sizes = tuple(obj["sizes"])
    params = {k: np.array(v, dtype=np.float64) for k, v in obj["params"].items()}
    for name in PARAM_NAMES:
        if name not in params:
            raise ValueError(f"{path}: missing parameter {name}")
    mlp = Mlp(sizes=sizes, params=params)
    opt = None
    if "optimizer" in obj:
        o = obj["optimizer"]
        opt = OptimizerState(
            lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"], step=o["step"],
            m={k: np.array(v, dtype=np.float64) for k, v in o["m"].items()},
            v={k: np.array(v, dtype=np.float64) for k, v in o["v"].items()},
        )
    return mlp, opt, obj.get("meta", {})
