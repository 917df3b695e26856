"""Soft actor-critic update rule on the numpy network kit.

Squashed-Gaussian actor with reparameterized samples, twin critics with
Polyak-averaged targets, and learned temperature driven toward a target
entropy. Gradients are analytic; the finite-difference tests cover the
complete losses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import Network, TwinCritic
from .optim import Adam

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_SQUASH_EPS = 1e-6


def policy_forward(actor: Network, obs: np.ndarray, eps: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Sample squashed-Gaussian actions with fixed noise eps; returns (a, logp, cache)."""
    out, cache = actor.forward(obs)
    dim = out.shape[1] // 2
    mean, log_std_raw = out[:, :dim], out[:, dim:]
    log_std = np.clip(log_std_raw, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    pre = mean + std * eps
    a = np.tanh(pre)
    logp = np.sum(-0.5 * eps * eps - 0.5 * np.log(2 * np.pi) - log_std
                  - np.log(1.0 - a * a + _SQUASH_EPS), axis=1)
    return a, logp, (cache, log_std_raw, log_std, std, a, eps)


def policy_backward(actor: Network, pcache: tuple, dL_da: np.ndarray,
                    dL_dlogp: np.ndarray) -> list[np.ndarray]:
    """Analytic gradients of a loss through (action, logp) into actor parameters."""
    cache, log_std_raw, log_std, std, a, eps = pcache
    sq = 1.0 - a * a
    t = 2.0 * a * sq / (sq + _SQUASH_EPS)          # dlogp/dpre
    dpre = dL_da * sq + dL_dlogp[:, None] * t
    dmean = dpre
    dlogstd = dpre * std * eps - dL_dlogp[:, None]
    mask = (log_std_raw > LOG_STD_MIN) & (log_std_raw < LOG_STD_MAX)
    upstream = np.concatenate([dmean, dlogstd * mask], axis=1)
    grads, _ = actor.backward(cache, upstream)
    return grads


@dataclass
class SacState:
    actor: Network
    critic: TwinCritic
    critic_target: TwinCritic
    log_alpha: float
    target_entropy: float
    gamma: float = 0.9
    tau: float = 0.005
    lr: float = 3e-4
    seed: int = 0
    # stability guards: temperature bounds and a global gradient-norm cap.
    # An unbounded learned temperature can run away when squashed actions
    # saturate (log-prob grows, targets inflate, critics chase them).
    log_alpha_min: float = -10.0
    log_alpha_max: float = float(np.log(2.0))
    grad_clip: float = 10.0
    opt_actor: Adam = field(init=False)
    opt_critic: Adam = field(init=False)
    opt_alpha: Adam = field(init=False)
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        self.opt_actor = Adam(self.actor.flat_params(), lr=self.lr)
        self.opt_critic = Adam(self.critic.flat_params(), lr=self.lr)
        self.opt_alpha = Adam([np.array(self.log_alpha)], lr=self.lr)
        self.rng = np.random.default_rng(
            np.random.SeedSequence([self.seed % (1 << 64), 23]))
        self.critic_target.copy_from(self.critic, 1.0)


def _clip_grads(grads: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return [g * scale for g in grads]


def act(state: SacState, obs: np.ndarray, deterministic: bool = False,
        rng: np.random.Generator | None = None) -> np.ndarray:
    out, _ = state.actor.forward(obs)
    dim = out.shape[1] // 2
    if deterministic:
        return np.tanh(out[:, :dim])
    rng = rng or state.rng
    eps = rng.standard_normal((obs.shape[0], dim))
    a, _, _ = policy_forward(state.actor, obs, eps)
    return a


def sac_update(state: SacState, batch: dict) -> dict:
    """One gradient step on critics, actor and temperature; Polyak target update."""
    obs = batch["obs"]
    acts = batch["act"]
    rew = batch["rew"]
    nobs = batch["next_obs"]
    done = batch["done"]
    b, dim = acts.shape
    alpha = float(np.exp(state.log_alpha))

    # critic targets
    eps2 = state.rng.standard_normal((b, dim))
    a2, logp2, _ = policy_forward(state.actor, nobs, eps2)
    qt1, qt2, _ = state.critic_target.forward(nobs, a2)
    qt = np.minimum(qt1[:, 0], qt2[:, 0]) - alpha * logp2
    y = rew + state.gamma * (1.0 - done) * qt

    losses = {}
    q1v, q2v, cache = state.critic.forward(obs, acts)
    diff1 = q1v[:, 0] - y
    diff2 = q2v[:, 0] - y
    losses["loss_q1"] = float(np.mean(diff1 * diff1))
    losses["loss_q2"] = float(np.mean(diff2 * diff2))
    cgrads = _clip_grads(state.critic.backward(cache, (2.0 / b) * diff1[:, None],
                                               (2.0 / b) * diff2[:, None]),
                         state.grad_clip)
    state.critic.set_flat_params(state.opt_critic.step(state.critic.flat_params(),
                                                       cgrads))

    # actor
    eps = state.rng.standard_normal((b, dim))
    a_new, logp, pcache = policy_forward(state.actor, obs, eps)
    q1n, q2n, ccache = state.critic.forward(obs, a_new)
    use1 = (q1n <= q2n).astype(state.actor.dtype)
    minq = np.minimum(q1n[:, 0], q2n[:, 0])
    losses["loss_actor"] = float(np.mean(alpha * logp - minq))
    gq = -np.ones((b, 1), dtype=state.actor.dtype) / b
    dL_da = state.critic.backward_extra(ccache, gq * use1, gq * (1.0 - use1))
    dL_dlogp = np.full(b, alpha / b)
    agrads = _clip_grads(policy_backward(state.actor, pcache, dL_da, dL_dlogp),
                         state.grad_clip)
    state.actor.set_flat_params(state.opt_actor.step(state.actor.flat_params(), agrads))

    # temperature: drive entropy toward the target
    ent_err = float(np.mean(logp + state.target_entropy))
    losses["loss_alpha"] = -state.log_alpha * ent_err
    (new_la,) = state.opt_alpha.step([np.array(state.log_alpha)], [np.array(-ent_err)])
    state.log_alpha = float(np.clip(new_la, state.log_alpha_min, state.log_alpha_max))
    losses["alpha"] = float(np.exp(state.log_alpha))

    state.critic_target.copy_from(state.critic, state.tau)
    return losses
