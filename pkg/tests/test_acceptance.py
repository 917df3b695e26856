"""Acceptance gate: one pass/fail line per top-level criterion.

Run with `pytest tests/test_acceptance.py -v -s`. The scaled direction
check trains policies and is marked slow; include it with `-m ''` or
`-m slow` (it reuses bundles under models/ when they exist).
"""
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from mechsearch.config import BinConfig
from mechsearch.freespace import FreeSpaceReport, measure_free_space, push_reward
from mechsearch.kernels import pure
from mechsearch.learnkit import (
    ComposedNet,
    Conv,
    Dense,
    DqnState,
    Flatten,
    MaxPool,
    Network,
    SacState,
    TwinCritic,
    dqn_update,
    policy_backward,
    policy_forward,
    sac_update,
)
from mechsearch.perception import CameraModel, masks_by_id, render
from mechsearch.primitives import ActionQuality, Thresholds, fsp_plan_push, heuristic_asp
from tests.conftest import brute_edt2

CFG = BinConfig()
REPO = Path(__file__).resolve().parents[1]


def check(name: str, cond: bool, detail: str = "") -> None:
    tag = "PASS" if cond else "FAIL"
    print(f"[{tag}] {name}" + (f" — {detail}" if detail else ""))
    assert cond, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# distance-transform exactness

def test_distance_transform_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n_checked = 0
    for i in range(1000):
        # sizes skewed small so the brute-force oracle stays tractable
        if i % 50 == 0:
            h, w = rng.integers(64, 129, size=2)
        else:
            h, w = rng.integers(2, 48, size=2)
        free = rng.random((h, w)) < rng.uniform(0.1, 0.98)
        if free.all():
            free[rng.integers(h), rng.integers(w)] = False
        if not np.array_equal(pure.edt_squared(free), brute_edt2(free)):
            check("distance-transform exactness", False,
                  f"mismatch on mask {i} ({h}x{w})")
        n_checked += 1
    dt = time.perf_counter() - t0
    check("distance-transform exactness",
          n_checked == 1000 and dt < 60.0,
          f"1000/1000 masks exact vs brute force in {dt:.1f}s (budget 60s)")


# ---------------------------------------------------------------------------
# reward pipeline

def _blob(h, w, r0, c0, hh=8, ww=8):
    m = np.zeros((h, w), dtype=bool)
    m[r0:r0 + hh, c0:c0 + ww] = True
    return m


def test_reward_pipeline():
    h, w = 80, 100
    bb = np.zeros((h, w), dtype=bool)
    bb[2:-2, 2:-2] = True
    signs_ok = 0
    n_cases = 0
    rng = np.random.default_rng(9)
    for k in range(10):
        # cluster of three obstacles, OOI adjacent on the east side
        rr = 20 + int(rng.integers(0, 30))
        cc = 12 + int(rng.integers(0, 10))
        cluster = {1: _blob(h, w, rr, cc), 2: _blob(h, w, rr + 9, cc + 2),
                   3: _blob(h, w, rr - 4, cc + 9)}
        near = _blob(h, w, rr + 2, cc + 18)      # touching the cluster edge
        far = _blob(h, w, rr + 2, cc + 52)       # pushed well clear
        rep_near = measure_free_space(bb, {0: near, **cluster})
        rep_far = measure_free_space(bb, {0: far, **cluster})
        r_away = push_reward(rep_near, rep_far, 0)   # away from the cluster
        r_into = push_reward(rep_far, rep_near, 0)   # into the cluster
        n_cases += 2
        signs_ok += int(r_away > 0.0) + int(r_into < 0.0)
    sign_ok = signs_ok == n_cases

    # closed-form arithmetic cases to 1e-12
    cases = [
        (({0: 2.0, 1: 3.0, 2: 1.0}, {0: 2.5, 1: 2.0, 2: 4.0}, 0),
         (10 * 0.5 + ((2.0 - 3.0) + (4.0 - 1.0)) / 2) / 11),
        (({0: 1.0, 1: 1.0}, {0: 4.0, 1: 0.0}, 0), (30.0 - 1.0) / 11),
        (({7: 5.0}, {7: 2.0}, 7), -30.0 / 11),
        (({0: 0.0, 1: 0.0, 2: 0.0, 3: 0.0},
          {0: 1.0, 1: 3.0, 2: 0.0, 3: -3.0}, 0), 10.0 / 11),
    ]
    worst = 0.0
    for (prev, cur, ooi), expect in cases:
        got = push_reward(FreeSpaceReport(prev, 0), FreeSpaceReport(cur, 1), ooi)
        worst = max(worst, abs(got - expect))
    check("reward pipeline",
          sign_ok and worst < 1e-12,
          f"{signs_ok}/{n_cases} sign-exact push cases; "
          f"worst arithmetic error {worst:.2e} (tol 1e-12)")


# ---------------------------------------------------------------------------
# gradient checks

def _fd_rel_error(get_loss, params, analytic, rng, n_probe=12, h=1e-6):
    worst = 0.0
    for arr, grad in zip(params, analytic):
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for i in rng.choice(flat.size, size=min(n_probe, flat.size), replace=False):
            old = flat[i]
            flat[i] = old + h
            lp = get_loss()
            flat[i] = old - h
            lm = get_loss()
            flat[i] = old
            fd = (lp - lm) / (2 * h)
            worst = max(worst, abs(gflat[i] - fd) / max(1.0, abs(fd)))
    return worst


def test_gradient_checks():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    worst = 0.0

    # every layer type in one stack
    net = Network((2, 12, 12), [Conv(4, 3, "relu"), MaxPool(2), Conv(6, 3, "tanh"),
                                Flatten(), Dense(10, "relu"), Dense(3, "linear")],
                  seed=3)
    x = rng.standard_normal((4, 2, 12, 12))
    w = rng.standard_normal((4, 3))
    _, cache = net.forward(x)
    grads, _ = net.backward(cache, w)
    worst = max(worst, _fd_rel_error(
        lambda: float((net.forward(x)[0] * w).sum()), net.flat_params(), grads, rng))

    # SAC losses: critic regression + actor loss through the sampler
    actor = Network((3,), [Dense(12, "relu"), Dense(4, "linear")], seed=5)
    trunk = Network((3,), [Dense(8, "relu")], seed=6)
    heads = [Network((10,), [Dense(8, "relu"), Dense(1, "linear")], seed=7 + i)
             for i in range(2)]
    critic = TwinCritic(trunk, heads[0], heads[1])
    obs = rng.standard_normal((5, 3))
    acts = np.tanh(rng.standard_normal((5, 2)))
    y = rng.standard_normal(5)

    def critic_loss():
        q1, q2, _ = critic.forward(obs, acts)
        return float(np.mean((q1[:, 0] - y) ** 2) + np.mean((q2[:, 0] - y) ** 2))

    q1, q2, ccache = critic.forward(obs, acts)
    cgrads = critic.backward(ccache, (2.0 / 5) * (q1 - y[:, None]),
                             (2.0 / 5) * (q2 - y[:, None]))
    worst = max(worst, _fd_rel_error(critic_loss, critic.flat_params(), cgrads, rng))

    eps = rng.standard_normal((5, 2))
    alpha = 0.2

    def actor_loss():
        a, logp, _ = policy_forward(actor, obs, eps)
        qa, qb, _ = critic.forward(obs, a)
        return float(np.mean(alpha * logp - np.minimum(qa[:, 0], qb[:, 0])))

    a, logp, pcache = policy_forward(actor, obs, eps)
    qa, qb, ccache2 = critic.forward(obs, a)
    use1 = (qa <= qb).astype(float)
    gq = -np.ones((5, 1)) / 5
    dL_da = critic.backward_extra(ccache2, gq * use1, gq * (1 - use1))
    agrads = policy_backward(actor, pcache, dL_da, np.full(5, alpha / 5))
    worst = max(worst, _fd_rel_error(actor_loss, actor.flat_params(), agrads, rng))

    # DQN loss
    qnet = ComposedNet(Network((1, 8, 8), [Conv(3, 3, "relu"), Flatten(),
                                           Dense(6, "relu")], seed=11),
                       Network((7,), [Dense(8, "relu"), Dense(3, "linear")], seed=12))
    img = rng.standard_normal((4, 1, 8, 8))
    extra = rng.standard_normal((4, 1))
    taken = rng.integers(0, 3, 4)
    targ = rng.standard_normal(4)

    def dqn_loss():
        qv, _ = qnet.forward(img, extra)
        d = qv[np.arange(4), taken] - targ
        return float(np.mean(d * d))

    qv, qcache = qnet.forward(img, extra)
    dq = np.zeros_like(qv)
    dq[np.arange(4), taken] = 2.0 * (qv[np.arange(4), taken] - targ) / 4
    qgrads, _, _ = qnet.backward(qcache, dq)
    worst = max(worst, _fd_rel_error(dqn_loss, qnet.flat_params(), qgrads, rng))

    dt = time.perf_counter() - t0
    check("gradient checks", worst < 1e-4 and dt < 120.0,
          f"worst relative error {worst:.2e} (tol 1e-4) in {dt:.1f}s (budget 120s)")


# ---------------------------------------------------------------------------
# DQN oracle equivalence on a 2-state chain MDP

def test_dqn_chain_mdp_oracle():
    t0 = time.perf_counter()
    gamma = 0.9
    # states as 4x4 images: s0 = zeros, s1 = ones
    s0 = np.zeros((1, 4, 4))
    s1 = np.ones((1, 4, 4))
    # transitions (s, a, r, s', done): a1 advances, terminal from s1
    trans = [(s0, 0, 0.0, s0, 0.0), (s0, 1, 0.0, s1, 0.0),
             (s1, 0, 0.0, s1, 0.0), (s1, 1, 1.0, s1, 1.0)]
    # value iteration oracle
    q_star = np.zeros((2, 2))
    for _ in range(200):
        v0, v1 = q_star[0].max(), q_star[1].max()
        q_star = np.array([[gamma * v0, gamma * v1], [gamma * v1, 1.0]])
    assert np.allclose(q_star, [[0.81, 0.9], [0.9, 1.0]])

    def mk(seed):
        t = Network((1, 4, 4), [Flatten(), Dense(16, "relu")], seed=seed)
        h = Network((16,), [Dense(16, "relu"), Dense(2, "linear")], seed=seed + 1)
        return ComposedNet(t, h)

    st = DqnState(mk(0), mk(0), gamma=gamma, sync_period=100, lr=3e-3)
    batch = {
        "obs_img": np.stack([t[0] for t in trans]),
        "obs_extra": np.zeros((4, 0)),
        "act": np.array([t[1] for t in trans]),
        "rew": np.array([t[2] for t in trans]),
        "next_img": np.stack([t[3] for t in trans]),
        "next_extra": np.zeros((4, 0)),
        "done": np.array([t[4] for t in trans]),
    }
    updates = 0
    err = math.inf
    while updates < 50_000 and err > 1e-2:
        for _ in range(200):
            dqn_update(st, batch)
            updates += 1
        q0, _ = st.q.forward(s0[None], np.zeros((1, 0)))
        q1, _ = st.q.forward(s1[None], np.zeros((1, 0)))
        err = float(np.abs(np.stack([q0[0], q1[0]]) - q_star).max())
    dt = time.perf_counter() - t0
    check("DQN oracle equivalence", err <= 1e-2 and dt < 60.0,
          f"max |Q - Q*| = {err:.4f} after {updates} updates "
          f"in {dt:.1f}s (tol 1e-2, budget 60s)")


# ---------------------------------------------------------------------------
# SAC continuous-bandit sanity

def test_sac_bandit_sanity():
    t0 = time.perf_counter()
    target = 0.5
    actor = Network((1,), [Dense(16, "relu"), Dense(2, "linear")], seed=1)

    def critic(s):
        t = Network((1,), [Dense(8, "relu")], seed=s)
        h1 = Network((9,), [Dense(16, "relu"), Dense(1, "linear")], seed=s + 1)
        h2 = Network((9,), [Dense(16, "relu"), Dense(1, "linear")], seed=s + 2)
        return TwinCritic(t, h1, h2)

    st = SacState(actor, critic(2), critic(5), log_alpha=math.log(0.2),
                  target_entropy=-1.0, gamma=0.0, lr=3e-3, seed=0)
    rng = np.random.default_rng(0)
    n_updates = 0
    for n_updates in range(1, 5001):
        obs = np.zeros((32, 1))
        a = np.clip(rng.uniform(-1, 1, (32, 1)), -0.999, 0.999)
        batch = {"obs": obs, "act": a,
                 "rew": 1.0 - (a[:, 0] - target) ** 2,
                 "next_obs": obs, "done": np.ones(32)}
        sac_update(st, batch)
        if n_updates % 500 == 0:
            out, _ = st.actor.forward(np.zeros((1, 1)))
            if abs(float(np.tanh(out[0, 0])) - target) < 0.05:
                break
    out, _ = st.actor.forward(np.zeros((1, 1)))
    a_det = float(np.tanh(out[0, 0]))
    dt = time.perf_counter() - t0
    check("SAC bandit sanity", abs(a_det - target) < 0.1 and dt < 120.0,
          f"deterministic action {a_det:.3f} vs optimum {target} after "
          f"{n_updates} updates in {dt:.1f}s (tol 0.1, budget 120s)")


# ---------------------------------------------------------------------------
# push inference latency

def test_push_inference_latency():
    from mechsearch.agents import PushPolicy, observation_center, push_observation
    from mechsearch.world import init_heap

    cam = CameraModel.for_bin(CFG)
    state = init_heap(CFG, 6, seed=1)
    depth, masks_l, bb = render(state, cam)
    masks = masks_by_id(masks_l)
    ooi = state.target.id
    center = observation_center(state, masks, ooi, cam)
    obs = push_observation(depth, center, cam)
    pol = PushPolicy(seed=0)
    pol.act(obs)  # warm up
    times = []
    for _ in range(1000):
        t0 = time.perf_counter()
        pol.act(obs, deterministic=True)
        times.append((time.perf_counter() - t0) * 1000)
    med = statistics.median(times)

    fsp_times = []
    for _ in range(20):
        t0 = time.perf_counter()
        fsp_plan_push(masks, bb, depth, cam, ooi, CFG)
        fsp_times.append((time.perf_counter() - t0) * 1000)
    fsp_med = statistics.median(fsp_times)
    check("push inference latency", med < 10.0,
          f"median {med:.2f} ms over 1000 calls (limit 10 ms); "
          f"free-space baseline planner median {fsp_med:.1f} ms for contrast")


# ---------------------------------------------------------------------------
# CLI determinism

def test_bench_cli_determinism(tmp_path):
    from click.testing import CliRunner
    from mechsearch.cli import main

    runner = CliRunner()
    outs = []
    for name in ("a", "b"):
        res = runner.invoke(main, ["bench", "--setup", "1", "--heap-size", "6",
                                   "--trials", "20", "--seed", "7",
                                   "--out", str(tmp_path / name)])
        assert res.exit_code == 0, res.output
        outs.append((tmp_path / name / "report.json").read_bytes())
    check("benchmark determinism", outs[0] == outs[1],
          f"two identical runs -> byte-identical report.json ({len(outs[0])} bytes)")


# ---------------------------------------------------------------------------
# heuristic selector truth table

def test_heuristic_selector_truth_table():
    qs = [-1.0] + [round(0.05 * i, 2) for i in range(21)]
    ths = [0.0, 0.1, 0.25, 0.5, 0.9, 1.0]
    n = 0
    for qg in qs:
        for qp in qs:
            for tg in ths:
                for tp in ths:
                    got = heuristic_asp(ActionQuality(qg, qp), Thresholds(tg, tp))
                    # independent statement of the priority tree
                    if qg != -1.0 and qg >= tg:
                        expect = "Grasp"
                    elif qp != -1.0 and qp >= tp:
                        expect = "Push"
                    else:
                        expect = "Skip"
                    if got != expect:
                        check("heuristic selector truth table", False,
                              f"q=({qg},{qp}) th=({tg},{tp}): {got} != {expect}")
                    n += 1
    check("heuristic selector truth table", True,
          f"{n} grid cases match the priority tree, including q=-1 exclusion")


# ---------------------------------------------------------------------------
# scaled direction check (trains policies; marked slow)

@pytest.mark.slow
def test_scaled_direction_check(tmp_path):
    from mechsearch.agents import (AspPolicy, FspPushPlanner,
                                   LearnedPushPlanner, PushPolicy,
                                   train_asp, train_push)
    from mechsearch.harness import SetupSpec, run_benchmark

    t0 = time.perf_counter()
    models = REPO / "models"
    push_bundle = models / "push" / "push_policy.msnn"

    if not push_bundle.exists():
        push_bundle = Path(train_push(CFG, tmp_path / "push", episodes=2000,
                                      heap_size=10, seed=0).bundle_path)
    push_policy = PushPolicy(seed=0)
    push_policy.load(push_bundle)

    # one selection policy per evaluated setup, each trained with the push
    # planner that setup runs with
    planners = {3: FspPushPlanner(), 4: LearnedPushPlanner(push_policy)}
    asp_policies = {}
    for n, name in ((3, "asp_fsp"), (4, "asp_learned")):
        bundle = models / "asp" / f"{name}.msnn"
        if not bundle.exists():
            bundle = Path(train_asp(CFG, tmp_path / name, planners[n],
                                    episodes=100, heap_size=8,
                                    seed=0).bundle_path)
        asp_policies[n] = AspPolicy(seed=0)
        asp_policies[n].load(bundle)

    by_setup = {}
    for n in (1, 3, 4):
        spec = SetupSpec.number(n, heap_size=8, trials=50, seed=123)
        report = run_benchmark([spec], CFG, push_policy=push_policy,
                               asp_policy=asp_policies.get(n))
        by_setup[n] = report["setups"][0]
    s1, s3, s4 = by_setup[1], by_setup[3], by_setup[4]
    dt = time.perf_counter() - t0

    def fmt(s):
        m = s["mean_actions"]
        return (f"setup {s['setup']}: mean {m:.2f}" if m is not None
                else f"setup {s['setup']}: mean n/a") + \
            f", succ@17 {s['success_curve'][16]:.2f} ({s['n_success']}/50)"

    detail = "; ".join(fmt(s) for s in (s1, s3, s4)) + f"; total {dt / 60:.0f} min"
    ok = (
        s1["mean_actions"] is not None
        and s3["mean_actions"] is not None and s4["mean_actions"] is not None
        and s3["mean_actions"] <= 0.9 * s1["mean_actions"]
        and s4["mean_actions"] <= 0.9 * s1["mean_actions"]
        and s3["success_curve"][16] > s1["success_curve"][16]
        and s4["success_curve"][16] > s1["success_curve"][16]
        and dt < 4 * 3600
    )
    check("scaled direction check", ok, detail)
