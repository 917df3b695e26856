"""Trainable sub-policies: continuous push policy and discrete action selector.

Both share the same encoder architecture (40x40 input, 98-feature vector)
with separate parameters. Training runs entirely on the planar simulator;
policies serialize to a weight file plus a JSON metadata sidecar.
"""
from __future__ import annotations

import hashlib
import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import freespace, perception
from . import geometry as geo
from .config import BinConfig
from .learnkit import (ComposedNet, Conv, Dense, DqnState, Flatten, MaxPool,
                       Network, ReplayBuffer, SacState, TwinCritic,
                       dqn_update, load_weights, policy_forward, q_values,
                       sac_update, save_weights)
from .perception import CameraModel, crop_downscale, mask_centroid
from .primitives import PushAction6, decode_push_action, fsp_plan_push
from .world import WorldState, apply_push, init_heap

FEATURE_DIM = 98
ACTION_DIM = 6
ASP_ACTIONS = ("Skip", "Grasp", "Push")
_HEIGHT_SCALE = 10.0  # meters -> network input units


def encoder_layers() -> list:
    """Shared conv encoder: 40x40 -> 98-feature vector."""
    return [Conv(8, 5, "relu"), MaxPool(2), Conv(16, 3, "relu"), MaxPool(2),
            Conv(16, 3, "relu"), Flatten(), Dense(FEATURE_DIM, "relu")]


# ---------------------------------------------------------------------------
# observation assembly

def observation_center(state: WorldState, masks: dict[int, np.ndarray],
                       ooi_id: int, cam: CameraModel) -> tuple[int, int]:
    """Crop center: visible-mask centroid, else the projected true centroid."""
    cen = mask_centroid(masks[ooi_id]) if ooi_id in masks else None
    if cen is None:
        obj = state.get(ooi_id)
        c = geo.polygon_centroid(obj.footprint())
        cen = cam.project(float(c[0]), float(c[1]))
    u = min(max(int(round(cen[0])), 0), cam.width - 1)
    v = min(max(int(round(cen[1])), 0), cam.height - 1)
    return u, v


def push_observation(depth: np.ndarray, center: tuple[int, int],
                     cam: CameraModel) -> np.ndarray:
    """Single-channel 40x40 height crop centered on the OOI."""
    crop = crop_downscale(depth, center, "depth", pad_value=cam.camera_height)
    return ((cam.camera_height - crop.grid) * _HEIGHT_SCALE).astype(np.float64)


@dataclass
class AspObservation:
    depth_crop: np.ndarray  # (40, 40)
    mask_crop: np.ndarray   # (40, 40)
    x_rel: float
    y_rel: float
    q_grasp: float
    q_push: float

    def image(self) -> np.ndarray:
        return np.stack([self.depth_crop, self.mask_crop])

    def extras(self) -> np.ndarray:
        return np.array([self.x_rel, self.y_rel, self.q_grasp, self.q_push])


def asp_observation(depth: np.ndarray, masks: dict[int, np.ndarray],
                    center: tuple[int, int], ooi_id: int, cam: CameraModel,
                    q_grasp: float, q_push: float) -> AspObservation:
    dcrop = crop_downscale(depth, center, "depth", pad_value=cam.camera_height)
    mcrop = crop_downscale(masks[ooi_id].astype(np.float64), center, "mask", pad_value=0.0)
    u, v = center
    return AspObservation(
        depth_crop=(cam.camera_height - dcrop.grid) * _HEIGHT_SCALE,
        mask_crop=mcrop.grid,
        x_rel=(u - cam.width / 2) / (cam.width / 2),
        y_rel=(v - cam.height / 2) / (cam.height / 2),
        q_grasp=q_grasp, q_push=q_push)


# ---------------------------------------------------------------------------
# policy bundles

def _git_revision() -> str:
    try:
        return subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                              text=True, timeout=5).stdout.strip() or "unknown"
    except OSError:
        return "unknown"


def _config_hash(cfg: BinConfig) -> str:
    import dataclasses
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_bundle(path: str | Path, nets: dict[str, Network | ComposedNet],
                meta: dict) -> None:
    path = Path(path)
    entries = []
    for name, net in sorted(nets.items()):
        for i, arr in enumerate(net.flat_params()):
            entries.append((f"{name}/{i}", arr))
    save_weights(path, entries)
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_bundle(path: str | Path, nets: dict[str, Network | ComposedNet]) -> dict:
    path = Path(path)
    loaded = dict(load_weights(path))
    for name, net in nets.items():
        arrays = []
        for i in range(len(net.flat_params())):
            key = f"{name}/{i}"
            if key not in loaded:
                raise KeyError(f"weight file missing {key}")
            arrays.append(loaded[key].astype(net.dtype))
        net.set_flat_params(arrays)
    sidecar = path.with_suffix(".json")
    return json.loads(sidecar.read_text()) if sidecar.exists() else {}


# ---------------------------------------------------------------------------
# push policy (continuous, soft actor-critic)

class PushPolicy:
    def __init__(self, seed: int = 0, dtype=np.float32, lr: float = 3e-4,
                 gamma: float = 0.9, tau: float = 0.005, q_sigmoid_scale: float = 1.0):
        self.seed = seed
        self.q_sigmoid_scale = q_sigmoid_scale
        actor = Network((1, 40, 40), encoder_layers()
                        + [Dense(64, "relu"), Dense(2 * ACTION_DIM, "linear")],
                        seed=seed, dtype=dtype)

        def critic(s):
            trunk = Network((1, 40, 40), encoder_layers(), seed=s, dtype=dtype)
            head = lambda hs: Network(
                (FEATURE_DIM + ACTION_DIM,),
                [Dense(64, "relu"), Dense(64, "relu"), Dense(1, "linear")],
                seed=hs, dtype=dtype)
            return TwinCritic(trunk, head(s + 1000), head(s + 2000))

        self.sac = SacState(actor, critic(seed + 1), critic(seed + 2),
                            log_alpha=float(np.log(0.2)),
                            target_entropy=-float(ACTION_DIM),
                            gamma=gamma, tau=tau, lr=lr, seed=seed)

    def _nets(self) -> dict:
        return {"actor": self.sac.actor, "critic": self.sac.critic}

    def act(self, obs: np.ndarray, deterministic: bool = True,
            rng: np.random.Generator | None = None) -> PushAction6:
        x = obs[None, None, :, :]
        out, _ = self.sac.actor.forward(x)
        if deterministic:
            a = np.tanh(out[:, :ACTION_DIM])
        else:
            rng = rng or self.sac.rng
            eps = rng.standard_normal((1, ACTION_DIM))
            a, _, _ = policy_forward(self.sac.actor, x, eps)
        return PushAction6.from_array(a[0])

    def quality(self, obs: np.ndarray, action: PushAction6) -> float:
        """q_push in [0, 1]: sigmoid of the min twin-critic value."""
        x = obs[None, None, :, :]
        a = np.array([[action.x_rel, action.y_rel, action.sin_alpha,
                       action.cos_alpha, action.sin_phi, action.cos_phi]])
        q1, q2, _ = self.sac.critic.forward(x, a)
        v = min(float(q1[0, 0]), float(q2[0, 0])) / self.q_sigmoid_scale
        return float(1.0 / (1.0 + math.exp(-v)))

    def save(self, path: str | Path, meta: dict | None = None) -> None:
        m = {"kind": "push_policy", "seed": self.seed, "git": _git_revision()}
        m.update(meta or {})
        save_bundle(path, self._nets(), m)

    def load(self, path: str | Path) -> dict:
        meta = load_bundle(path, self._nets())
        self.sac.critic_target.copy_from(self.sac.critic, 1.0)
        return meta


# ---------------------------------------------------------------------------
# action-selection policy (discrete, DQN)

class AspPolicy:
    def __init__(self, seed: int = 0, dtype=np.float32, lr: float = 3e-4,
                 gamma: float = 0.99, sync_period: int = 200):
        self.seed = seed

        def qnet(s):
            trunk = Network((2, 40, 40), encoder_layers(), seed=s, dtype=dtype)
            head = Network((FEATURE_DIM + 4,),
                           [Dense(64, "relu"), Dense(64, "relu"), Dense(3, "linear")],
                           seed=s + 1000, dtype=dtype)
            return ComposedNet(trunk, head)

        self.dqn = DqnState(qnet(seed + 11), qnet(seed + 11), gamma=gamma,
                            sync_period=sync_period, lr=lr)
        self.rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 31]))

    def _nets(self) -> dict:
        return {"q": self.dqn.q}

    def q_of(self, obs: AspObservation) -> np.ndarray:
        return q_values(self.dqn, obs.image()[None], obs.extras()[None])[0]

    def act(self, obs: AspObservation, epsilon: float = 0.0,
            rng: np.random.Generator | None = None) -> str:
        rng = rng or self.rng
        if epsilon > 0.0 and rng.random() < epsilon:
            return ASP_ACTIONS[int(rng.integers(3))]
        q = self.q_of(obs)
        return ASP_ACTIONS[int(np.argmax(q))]

    def save(self, path: str | Path, meta: dict | None = None) -> None:
        m = {"kind": "asp_policy", "seed": self.seed, "git": _git_revision()}
        m.update(meta or {})
        save_bundle(path, self._nets(), m)

    def load(self, path: str | Path) -> dict:
        meta = load_bundle(path, self._nets())
        self.dqn.q_target.copy_from(self.dqn.q, 1.0)
        return meta


# ---------------------------------------------------------------------------
# push planners used by the episode loop (learned or free-space baseline)

class FspPushPlanner:
    name = "fsp"

    def plan(self, state: WorldState, depth, masks, bin_bottom, cam, ooi_id):
        return fsp_plan_push(masks, bin_bottom, depth, cam, ooi_id, state.config)


class LearnedPushPlanner:
    name = "learned"

    def __init__(self, policy: PushPolicy):
        self.policy = policy

    def plan(self, state: WorldState, depth, masks, bin_bottom, cam, ooi_id):
        center = observation_center(state, masks, ooi_id, cam)
        obs = push_observation(depth, center, cam)
        action = self.policy.act(obs, deterministic=True)
        cmd = decode_push_action(action, center, depth, cam, state.config)
        if cmd is None:
            return None, -1.0
        return cmd, self.policy.quality(obs, action)


# ---------------------------------------------------------------------------
# training loops

@dataclass
class TrainResult:
    bundle_path: str
    curve: list[dict] = field(default_factory=list)


def _reward_reports(state: WorldState, reward_cam: CameraModel, t: int
                    ) -> freespace.FreeSpaceReport:
    _, masks, bb = perception.render(state, reward_cam)
    return freespace.measure_free_space(bb, perception.masks_by_id(masks), t)


def train_push(cfg: BinConfig, out_dir: str | Path, episodes: int = 2000,
               heap_size: int = 10, steps_per_episode: int = 5,
               updates_per_step: int = 2, batch_size: int = 64,
               buffer_capacity: int = 100_000, warmup: int = 500,
               checkpoint_every: int = 500, seed: int = 0,
               lr: float = 3e-4, gamma: float = 0.9,
               reward_scale: float = 0.1, log_cb=None) -> TrainResult:
    """SAC training on fixed-size heaps; reward is the free-space change.

    reward_scale only rescales the reward fed to the critic update: the
    free-space reward is O(10) in distance-transform pixels, and critics
    track it far more stably at O(1) against the entropy bonus.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = PushPolicy(seed=seed, lr=lr, gamma=gamma)
    buf = ReplayBuffer(buffer_capacity, seed=seed)
    cam = CameraModel.for_bin(cfg)
    reward_cam = CameraModel.for_bin(cfg, downscale=cfg.reward_downscale)
    rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 41]))
    curve = []
    csv_rows = ["episode,step,reward,loss_q1,loss_actor,alpha"]
    for ep in range(episodes):
        state = init_heap(cfg, heap_size, seed * 1_000_003 + ep)
        ooi = state.target.id
        depth, masks_l, bb = perception.render(state, cam)
        masks = perception.masks_by_id(masks_l)
        report = _reward_reports(state, reward_cam, 0)
        center = observation_center(state, masks, ooi, cam)
        obs = push_observation(depth, center, cam)
        ep_reward = 0.0
        losses = {}
        for step in range(steps_per_episode):
            if len(buf) < warmup:
                # uniform exploration until the buffer can feed updates
                action = PushAction6(*rng.uniform(-1.0, 1.0, size=6))
            else:
                action = policy.act(obs, deterministic=False, rng=rng)
            cmd = decode_push_action(action, center, depth, cam, cfg)
            if cmd is not None:
                state = apply_push(state, cmd)
            new_report = _reward_reports(state, reward_cam, step + 1)
            r = freespace.push_reward(report, new_report, ooi)
            report = new_report
            depth, masks_l, bb = perception.render(state, cam)
            masks = perception.masks_by_id(masks_l)
            center = observation_center(state, masks, ooi, cam)
            next_obs = push_observation(depth, center, cam)
            done = 1.0 if step == steps_per_episode - 1 else 0.0
            a_arr = np.array([action.x_rel, action.y_rel, action.sin_alpha,
                              action.cos_alpha, action.sin_phi, action.cos_phi])
            buf.push((obs, a_arr, r * reward_scale, next_obs, done))
            obs = next_obs
            ep_reward += r
            if len(buf) >= max(warmup, batch_size):
                for _ in range(updates_per_step):
                    sample = buf.sample(batch_size)
                    batch = dict(
                        obs=np.stack([s[0] for s in sample])[:, None],
                        act=np.stack([s[1] for s in sample]),
                        rew=np.array([s[2] for s in sample]),
                        next_obs=np.stack([s[3] for s in sample])[:, None],
                        done=np.array([s[4] for s in sample]))
                    losses = sac_update(policy.sac, batch)
        curve.append({"episode": ep, "reward": ep_reward, **losses})
        csv_rows.append(f"{ep},{steps_per_episode},{ep_reward},"
                        f"{losses.get('loss_q1', '')},{losses.get('loss_actor', '')},"
                        f"{losses.get('alpha', '')}")
        if log_cb:
            log_cb(ep, ep_reward, losses)
        if checkpoint_every and (ep + 1) % checkpoint_every == 0:
            policy.save(out_dir / f"push_ep{ep + 1}.msnn",
                        {"episodes": ep + 1, "config_hash": _config_hash(cfg)})
    bundle = out_dir / "push_policy.msnn"
    policy.save(bundle, {"episodes": episodes, "seed": seed,
                         "config_hash": _config_hash(cfg),
                         "heap_size": heap_size,
                         "reward_scale": reward_scale})
    (out_dir / "push_training.csv").write_text("\n".join(csv_rows) + "\n")
    return TrainResult(str(bundle), curve)


def train_asp(cfg: BinConfig, out_dir: str | Path, push_planner,
              episodes: int = 100, heap_size: int = 8, step_cap: int = 25,
              updates_per_step: int = 20, batch_size: int = 64,
              buffer_capacity: int = 100_000, warmup: int = 200,
              seed: int = 0, lr: float = 3e-4, gamma: float = 0.99,
              log_cb=None) -> TrainResult:
    """DQN training of the action selector over full search episodes."""
    from .harness import EpisodeRunner  # local import to avoid a cycle

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = AspPolicy(seed=seed, lr=lr, gamma=gamma)
    buf = ReplayBuffer(buffer_capacity, seed=seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 43]))
    curve = []
    csv_rows = ["episode,steps,return,epsilon,loss"]
    anneal = max(1, episodes // 2)
    for ep in range(episodes):
        epsilon = 1.0 + min(1.0, ep / anneal) * (0.05 - 1.0)
        runner = EpisodeRunner(cfg, push_planner, asp=None,
                               seed=seed * 777_001 + ep, heap_size=heap_size,
                               step_cap=step_cap)
        obs = runner.current_asp_observation()
        ep_ret, steps, loss = 0.0, 0, float("nan")
        while obs is not None and not runner.finished:
            act_name = policy.act(obs, epsilon=epsilon, rng=rng)
            reward, next_obs, done = runner.step_asp(act_name)
            buf.push((obs.image(), obs.extras(), ASP_ACTIONS.index(act_name),
                      reward,
                      (next_obs or obs).image(), (next_obs or obs).extras(),
                      1.0 if done else 0.0))
            ep_ret += reward
            steps += 1
            obs = next_obs
            if len(buf) >= max(warmup, batch_size):
                for _ in range(updates_per_step):
                    sample = buf.sample(batch_size)
                    batch = dict(
                        obs_img=np.stack([s[0] for s in sample]),
                        obs_extra=np.stack([s[1] for s in sample]),
                        act=np.array([s[2] for s in sample]),
                        rew=np.array([s[3] for s in sample]),
                        next_img=np.stack([s[4] for s in sample]),
                        next_extra=np.stack([s[5] for s in sample]),
                        done=np.array([s[6] for s in sample]))
                    loss = dqn_update(policy.dqn, batch)
        curve.append({"episode": ep, "return": ep_ret, "steps": steps,
                      "epsilon": epsilon, "loss": loss})
        csv_rows.append(f"{ep},{steps},{ep_ret},{epsilon},{loss}")
        if log_cb:
            log_cb(ep, ep_ret, {"epsilon": epsilon, "loss": loss})
    bundle = out_dir / "asp_policy.msnn"
    policy.save(bundle, {"episodes": episodes, "seed": seed,
                         "config_hash": _config_hash(cfg),
                         "heap_size": heap_size,
                         "push_planner": push_planner.name})
    (out_dir / "asp_training.csv").write_text("\n".join(csv_rows) + "\n")
    return TrainResult(str(bundle), curve)
