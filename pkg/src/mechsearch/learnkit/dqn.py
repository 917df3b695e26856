"""Deep Q-network update rule: squared Bellman error, hard target sync."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ComposedNet
from .optim import Adam


@dataclass
class DqnState:
    q: ComposedNet
    q_target: ComposedNet
    gamma: float = 0.99
    sync_period: int = 200
    lr: float = 3e-4
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 1
    step_count: int = 0
    opt: Adam = field(init=False)

    def __post_init__(self):
        self.opt = Adam(self.q.flat_params(), lr=self.lr)
        self.q_target.copy_from(self.q, 1.0)

    def epsilon(self, step: int) -> float:
        frac = min(1.0, step / max(1, self.eps_decay_steps))
        return self.eps_start + frac * (self.eps_end - self.eps_start)


def q_values(state: DqnState, img: np.ndarray, extra: np.ndarray) -> np.ndarray:
    out, _ = state.q.forward(img, extra)
    return out


def dqn_update(state: DqnState, batch: dict) -> float:
    """One squared-error Bellman step on the taken actions; returns the loss."""
    img, extra = batch["obs_img"], batch["obs_extra"]
    act = batch["act"]
    rew, done = batch["rew"], batch["done"]
    b = act.shape[0]

    qt, _ = state.q_target.forward(batch["next_img"], batch["next_extra"])
    y = rew + state.gamma * (1.0 - done) * qt.max(axis=1)

    qv, cache = state.q.forward(img, extra)
    taken = qv[np.arange(b), act]
    diff = taken - y
    loss = float(np.mean(diff * diff))
    dq = np.zeros_like(qv)
    dq[np.arange(b), act] = 2.0 * diff / b
    grads, _, _ = state.q.backward(cache, dq)
    state.q.set_flat_params(state.opt.step(state.q.flat_params(), grads))

    state.step_count += 1
    if state.step_count % state.sync_period == 0:
        state.q_target.copy_from(state.q, 1.0)
    return loss
