"""Policy-gradient trainers: a clipped-surrogate learner and a one-step
advantage actor-critic, both on the numpy network from :mod:`balancekit.nn`.

Training budget doubles as the skill axis: a small step budget produces a
novice agent, a 10x budget a professional. Everything is deterministic in
(config, seed): environment resets, action sampling, and minibatch shuffles
all draw from named sub-streams, so re-running a config reproduces the
checkpoint byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .env import GameEnv
from .games import make_env
from .nn import (
    Mlp,
    OptimizerState,
    adam_init,
    adam_step,
    backward_batch,
    categorical_sample,
    forward_batch,
    log_softmax,
    mlp_init,
    save_checkpoint,
)
from .rng import Rng, derive_seed

# Step budgets. Desk scale runs on a laptop CPU in minutes; full scale
# matches the published novice/professional budgets.
DESK_BUDGETS = {"novice": 20_000, "professional": 200_000}
FULL_BUDGETS = {"novice": 100_000, "professional": 1_000_000}
PROFESSIONAL_STEP_THRESHOLD = 200_000

MODELS = ("ppo", "a2c")
SKILLS = ("novice", "professional")


@dataclass
class TrainConfig:
    model: str = "ppo"
    total_steps: int = 20_000
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    rollout_length: int = 2048
    epochs: int = 10
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    learning_rate: float = 3e-4
    seed: int = 0
    parallel_envs: int = 8

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.gae_lambda <= 1.0):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if self.clip_epsilon <= 0.0:
            raise ValueError("clip_epsilon must be positive")
        if self.total_steps <= 0 or self.rollout_length <= 0 or self.parallel_envs <= 0:
            raise ValueError("step counts must be positive")
        if self.epochs <= 0 or self.minibatch_size <= 0:
            raise ValueError("epochs and minibatch_size must be positive")


def desk_train_config(
    model: str = "ppo",
    skill: str = "novice",
    seed: int = 0,
    full_scale: bool = False,
) -> TrainConfig:
    """Budget/rollout preset.

    Desk scale shrinks the per-env rollout so the small budgets still see a
    healthy number of updates; full scale uses the conventional 2048.
    """
    if skill not in SKILLS:
        raise ValueError(f"unknown skill {skill!r}")
    budgets = FULL_BUDGETS if full_scale else DESK_BUDGETS
    if model == "a2c":
        rollout = 5
    else:
        rollout = 2048 if full_scale else 256
    return TrainConfig(
        model=model,
        total_steps=budgets[skill],
        rollout_length=rollout,
        seed=seed,
    )


def skill_for_steps(total_steps: int) -> str:
    return "professional" if total_steps >= PROFESSIONAL_STEP_THRESHOLD else "novice"


# -- policies -----------------------------------------------------------------


class RandomPolicy:
    """Uniform action picker; ignores observations entirely."""

    def __init__(self, action_count: int, seed: int):
        if action_count < 1:
            raise ValueError("need at least one action")
        self.action_count = action_count
        self.rng = Rng.for_purpose(seed, "policy")

    def act(self, obs) -> int:
        return self.rng.randrange(self.action_count)


class AgentPolicy:
    """Wraps a trained network; samples the categorical head by default,
    or plays the argmax action in greedy mode."""

    def __init__(self, mlp: Mlp, seed: int, mode: str = "sample"):
        if mode not in ("sample", "argmax"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mlp = mlp
        self.mode = mode
        self.rng = Rng.for_purpose(seed, "policy")

    def act(self, obs) -> int:
        logits, _, _ = forward_batch(self.mlp, np.asarray(obs)[None, :])
        if self.mode == "argmax":
            return int(np.argmax(logits[0]))
        idx, _ = categorical_sample(logits[0], self.rng)
        return idx


def random_policy(action_count: int, seed: int) -> RandomPolicy:
    return RandomPolicy(action_count, seed)


# -- advantage estimation -------------------------------------------------------


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates plus value targets for one env stream.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
    A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}
    returns_t = A_t + V(s_t)
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape) or rewards.ndim != 1:
        raise ValueError("rewards, values, dones must be congruent 1-D arrays")
    n = rewards.shape[0]
    advantages = np.zeros(n, dtype=np.float64)
    next_adv = 0.0
    next_value = float(bootstrap)
    for t in range(n - 1, -1, -1):
        mask = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * mask - values[t]
        next_adv = delta + gamma * lam * mask * next_adv
        advantages[t] = next_adv
        next_value = values[t]
    return advantages, advantages + values


# -- rollout collection ----------------------------------------------------------


@dataclass
class Rollout:
    obs: np.ndarray  # (T, E, n)
    actions: np.ndarray  # (T, E) int
    log_probs: np.ndarray  # (T, E)
    rewards: np.ndarray  # (T, E)
    values: np.ndarray  # (T, E)
    dones: np.ndarray  # (T, E) bool
    bootstrap: np.ndarray  # (E,)
    episode_rewards: list[float] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.obs.shape[0] * self.obs.shape[1]


class _EnvSlot:
    """One environment plus its reset bookkeeping inside the collector."""

    def __init__(self, env: GameEnv, seed: int, index: int):
        self.env = env
        self.seed = seed
        self.index = index
        self.episodes = 0
        self.episode_reward = 0.0
        self.obs = env.reset(derive_seed(seed, "train", index, 0))

    def step(self, action_index: int):
        result = self.env.step(self.env.actions[action_index])
        self.episode_reward += result.reward
        finished = None
        if result.done:
            finished = self.episode_reward
            self.episode_reward = 0.0
            self.episodes += 1
            self.obs = self.env.reset(
                derive_seed(self.seed, "train", self.index, self.episodes)
            )
        else:
            self.obs = result.observation
        return result, finished


def make_env_slots(
    game: str,
    version: int,
    seed: int,
    parallel_envs: int,
    env_overrides: dict | None = None,
) -> list["_EnvSlot"]:
    overrides = env_overrides or {}
    return [
        _EnvSlot(make_env(game, version, **overrides), seed, i)
        for i in range(parallel_envs)
    ]


def collect_rollout(
    slots: list[_EnvSlot],
    mlp: Mlp,
    sample_rng: Rng,
    rollout_length: int,
) -> Rollout:
    T, E = rollout_length, len(slots)
    n = mlp.obs_size
    obs = np.zeros((T, E, n))
    actions = np.zeros((T, E), dtype=np.int64)
    log_probs = np.zeros((T, E))
    rewards = np.zeros((T, E))
    values = np.zeros((T, E))
    dones = np.zeros((T, E), dtype=bool)
    episode_rewards: list[float] = []
    for t in range(T):
        batch = np.stack([s.obs for s in slots])
        logits, vals, _ = forward_batch(mlp, batch)
        obs[t] = batch
        values[t] = vals
        for e, slot in enumerate(slots):
            a, lp = categorical_sample(logits[e], sample_rng)
            actions[t, e] = a
            log_probs[t, e] = lp
            result, finished = slot.step(a)
            rewards[t, e] = result.reward
            dones[t, e] = result.done
            if finished is not None:
                episode_rewards.append(finished)
    final_batch = np.stack([s.obs for s in slots])
    _, bootstrap, _ = forward_batch(mlp, final_batch)
    return Rollout(
        obs=obs,
        actions=actions,
        log_probs=log_probs,
        rewards=rewards,
        values=values,
        dones=dones,
        bootstrap=bootstrap.copy(),
        episode_rewards=episode_rewards,
    )


def rollout_advantages(rollout: Rollout, gamma: float, lam: float):
    """Per-env GAE, flattened to (N,) alongside flattened value targets."""
    T, E = rollout.rewards.shape
    adv = np.zeros((T, E))
    ret = np.zeros((T, E))
    for e in range(E):
        adv[:, e], ret[:, e] = compute_gae(
            rollout.rewards[:, e],
            rollout.values[:, e],
            rollout.dones[:, e],
            float(rollout.bootstrap[e]),
            gamma,
            lam,
        )
    return adv.reshape(-1), ret.reshape(-1)


def _flat(rollout: Rollout):
    T, E, n = rollout.obs.shape
    return (
        rollout.obs.reshape(T * E, n),
        rollout.actions.reshape(-1),
        rollout.log_probs.reshape(-1),
    )


# -- shared gradient core ---------------------------------------------------------


def _policy_value_grads(
    mlp: Mlp,
    obs: np.ndarray,
    actions: np.ndarray,
    surrogate_dlp: np.ndarray,
    value_targets: np.ndarray,
    entropy_coef: float,
    value_coef: float,
):
    """Gradients of

        loss = -mean(surrogate) + value_coef * mean((V - target)^2)
               - entropy_coef * mean(H)

    where ``surrogate_dlp[i]`` is d(surrogate_i)/d(log pi(a_i|s_i)). The
    caller encodes its objective (clipped ratio or plain log-prob weighting)
    entirely in that vector. Returns (grads, report).
    """
    B = obs.shape[0]
    logits, vals, cache = forward_batch(mlp, obs)
    logp = log_softmax(logits)
    probs = np.exp(logp)
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(B), actions] = 1.0
    ent = -(probs * logp).sum(axis=1)

    # d(-mean surr)/dlogits: chain through dlp/dlogits = one_hot - probs
    dlogits = -(surrogate_dlp[:, None] * (one_hot - probs)) / B
    # d(-entropy_coef * mean H)/dlogits
    dlogits += entropy_coef * probs * (logp + ent[:, None]) / B
    verr = vals - value_targets
    dvalues = value_coef * 2.0 * verr / B

    grads = backward_batch(mlp, cache, dlogits, dvalues)
    report = {
        "value_loss": float(np.mean(verr**2)),
        "entropy": float(np.mean(ent)),
    }
    return grads, report


# -- updates ----------------------------------------------------------------------


def clipped_surrogate(ratio: np.ndarray, adv: np.ndarray, eps: float):
    """Per-sample min(ratio * A, clip(ratio, 1-eps, 1+eps) * A) and its
    derivative with respect to the new log-probability.

    The derivative is ratio * A on the unclipped branch (also anywhere the
    clip is inactive, where both branches coincide) and 0 where the clipped
    branch is strictly active.
    """
    ratio = np.asarray(ratio, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    objective = np.minimum(unclipped, clipped)
    live = (unclipped <= clipped) | ((ratio >= 1.0 - eps) & (ratio <= 1.0 + eps))
    dlp = np.where(live, unclipped, 0.0)
    return objective, dlp


def ppo_update(
    mlp: Mlp,
    opt: OptimizerState,
    rollout: Rollout,
    config: TrainConfig,
    shuffle_rng: Rng,
    normalize_advantages: bool = True,
) -> dict:
    """Clipped-surrogate update: epochs x minibatches, normalized advantages."""
    if rollout.size == 0:
        raise ValueError("empty rollout")
    obs, actions, old_logp = _flat(rollout)
    advantages, returns = rollout_advantages(rollout, config.gamma, config.gae_lambda)
    if normalize_advantages:
        norm_adv = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    else:
        norm_adv = advantages

    # diagnostic: with unchanged parameters every ratio must be exactly 1
    pre_logits, _, _ = forward_batch(mlp, obs)
    pre_logp = log_softmax(pre_logits)[np.arange(obs.shape[0]), actions]
    pre_ratio_err = float(np.abs(np.exp(pre_logp - old_logp) - 1.0).max())

    n = obs.shape[0]
    eps = config.clip_epsilon
    report = {}
    clip_hits = 0
    seen = 0
    for _ in range(config.epochs):
        order = np.arange(n)
        for i in range(n - 1, 0, -1):  # Fisher-Yates on the harness rng
            j = shuffle_rng.randrange(i + 1)
            order[i], order[j] = order[j], order[i]
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            logits, _, _ = forward_batch(mlp, obs[idx])
            lp = log_softmax(logits)[np.arange(len(idx)), actions[idx]]
            ratio = np.exp(lp - old_logp[idx])
            objective, surrogate_dlp = clipped_surrogate(ratio, norm_adv[idx], eps)
            clip_hits += int(np.sum((surrogate_dlp == 0.0) & (norm_adv[idx] != 0.0)))
            seen += len(idx)
            grads, rep = _policy_value_grads(
                mlp,
                obs[idx],
                actions[idx],
                surrogate_dlp,
                returns[idx],
                config.entropy_coef,
                config.value_coef,
            )
            adam_step(mlp, grads, opt)
            report = {"policy_objective": float(np.mean(objective)), **rep}
    report["pre_update_ratio_max_err"] = pre_ratio_err
    report["clip_fraction"] = clip_hits / max(1, seen)
    report["advantage_mean"] = float(norm_adv.mean())
    report["advantage_std"] = float(norm_adv.std())
    return report


def a2c_update(
    mlp: Mlp,
    opt: OptimizerState,
    rollout: Rollout,
    config: TrainConfig,
) -> dict:
    """Single whole-rollout update with unnormalized advantages."""
    if rollout.size == 0:
        raise ValueError("empty rollout")
    obs, actions, _ = _flat(rollout)
    advantages, returns = rollout_advantages(rollout, config.gamma, config.gae_lambda)
    grads, rep = _policy_value_grads(
        mlp,
        obs,
        actions,
        advantages,  # d(logp * A)/dlp = A
        returns,
        config.entropy_coef,
        config.value_coef,
    )
    adam_step(mlp, grads, opt)
    rep["policy_objective"] = float(np.mean(advantages))
    return rep


# -- the training loop --------------------------------------------------------------


@dataclass
class TrainedAgent:
    mlp: Mlp
    model: str
    skill: str
    game: str
    version: int
    train_steps: int
    seed: int

    def meta(self) -> dict:
        return {
            "algo": self.model,
            "skill": self.skill,
            "game": self.game,
            "version": self.version,
            "train_steps": self.train_steps,
            "seed": self.seed,
        }

    def save(self, path, opt: OptimizerState | None = None) -> None:
        save_checkpoint(path, self.mlp, opt, self.meta())


def train(
    game: str,
    version: int,
    config: TrainConfig,
    env_overrides: dict | None = None,
    progress=None,
):
    """Collect/update until the step budget is consumed.

    Returns (TrainedAgent, TrainingLog) where the log is one dict per update:
    steps so far, mean episode reward over the window (None if no episode
    finished), losses, entropy, and elapsed wall-clock seconds.
    """
    slots = make_env_slots(game, version, config.seed, config.parallel_envs, env_overrides)
    probe = slots[0].env
    mlp = mlp_init(derive_seed(config.seed, "model"), probe.observation_length, len(probe.actions))
    opt = adam_init(mlp, lr=config.learning_rate)
    sample_rng = Rng.for_purpose(config.seed, "train-sample")
    shuffle_rng = Rng.for_purpose(config.seed, "train-shuffle")

    log: list[dict] = []
    steps = 0
    update = 0
    started = time.monotonic()
    while steps < config.total_steps:
        rollout = collect_rollout(slots, mlp, sample_rng, config.rollout_length)
        steps += rollout.size
        update += 1
        if config.model == "ppo":
            report = ppo_update(mlp, opt, rollout, config, shuffle_rng)
        else:
            report = a2c_update(mlp, opt, rollout, config)
        entry = {
            "update": update,
            "steps": steps,
            "mean_episode_reward": (
                float(np.mean(rollout.episode_rewards))
                if rollout.episode_rewards
                else None
            ),
            "episodes_finished": len(rollout.episode_rewards),
            "wall_clock_s": round(time.monotonic() - started, 3),
            **{k: v for k, v in report.items()},
        }
        log.append(entry)
        if progress is not None:
            progress(entry)
    agent = TrainedAgent(
        mlp=mlp,
        model=config.model,
        skill=skill_for_steps(config.total_steps),
        game=game,
        version=version,
        train_steps=steps,
        seed=config.seed,
    )
    return agent, log
