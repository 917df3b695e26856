"""Hierarchical episode loop, the four-setup benchmark matrix, and reports.

A search episode ranks visible objects, queries the grasp planner and the
push planner for the head object of interest, lets an action selector pick
Skip/Grasp/Push, and executes the primitive in the simulator. Trials stop
on target delivery, target loss, or the 25-action cap.

Skip accounting (declared in every report): during one ranking pass Skips
are free; when the ranking is exhausted one action slot is charged. This
keeps Grasp/Push counts comparable while preventing infinite Skip loops.
"""
from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import perception
from .agents import (AspObservation, AspPolicy, FspPushPlanner,
                     LearnedPushPlanner, asp_observation, observation_center)
from .config import BinConfig
from .freespace import asp_reward
from .perception import CameraModel
from .primitives import (ActionQuality, Thresholds, heuristic_asp, plan_grasp,
                         select_object)
from .world import GraspCommand, PushCommand, WorldState, apply_grasp, apply_push, init_heap

ACTION_CAP = 25

SETUPS = {
    1: ("heuristic", "fsp"),
    2: ("heuristic", "learned"),
    3: ("learned", "fsp"),
    4: ("learned", "learned"),
}


@dataclass(frozen=True)
class SetupSpec:
    asp: str               # "heuristic" | "learned"
    push: str              # "fsp" | "learned"
    heap_size: int
    trials: int
    seed: int
    action_cap: int = ACTION_CAP

    def __post_init__(self):
        if self.asp not in ("heuristic", "learned"):
            raise ValueError(f"unknown asp {self.asp!r}")
        if self.push not in ("fsp", "learned"):
            raise ValueError(f"unknown push {self.push!r}")

    @classmethod
    def number(cls, n: int, heap_size: int, trials: int, seed: int) -> "SetupSpec":
        asp, push = SETUPS[n]
        return cls(asp, push, heap_size, trials, seed)

    @property
    def setup_id(self) -> int:
        for n, combo in SETUPS.items():
            if combo == (self.asp, self.push):
                return n
        raise AssertionError


@dataclass
class OoiContext:
    ooi_id: int
    obs: AspObservation
    grasp_cmd: GraspCommand | None
    q_grasp: float
    push_cmd: PushCommand | None
    q_push: float


class SearchEpisode:
    """World + perception + planner state for one episode; no accounting."""

    def __init__(self, cfg: BinConfig, push_planner, seed: int, heap_size: int):
        self.cfg = cfg
        self.push_planner = push_planner
        self.cam = CameraModel.for_bin(cfg)
        self.state = init_heap(cfg, heap_size, seed)
        self.target_id = self.state.target.id
        self.refresh()

    def refresh(self) -> None:
        self.depth, masks_l, self.bin_bottom = perception.render(self.state, self.cam)
        self.masks = perception.masks_by_id(masks_l)
        self.ranking = select_object(self.masks, self.target_id,
                                     self.cfg.min_visible_px)

    @property
    def target_delivered(self) -> bool:
        return self.state.delivered_target

    @property
    def target_lost(self) -> bool:
        return not self.state.delivered_target and self.state.target is None

    def context(self, ooi_id: int) -> OoiContext:
        grasp_cmd, q_grasp = plan_grasp(self.state, self.masks, ooi_id, self.cam)
        push_cmd, q_push = self.push_planner.plan(
            self.state, self.depth, self.masks, self.bin_bottom, self.cam, ooi_id)
        center = observation_center(self.state, self.masks, ooi_id, self.cam)
        obs = asp_observation(self.depth, self.masks, center, ooi_id, self.cam,
                              q_grasp, q_push)
        return OoiContext(ooi_id, obs, grasp_cmd, q_grasp, push_cmd, q_push)

    def execute(self, kind: str, ctx: OoiContext) -> str:
        """Run a feasible primitive; returns the sparse-reward outcome key."""
        if kind == "Grasp":
            self.state, result = apply_grasp(self.state, ctx.grasp_cmd)
            self.refresh()
            return "extracted_target" if result == "delivered_target" else "other"
        if kind == "Push":
            self.state = apply_push(self.state, ctx.push_cmd)
            self.refresh()
            return "other"
        raise ValueError(f"cannot execute {kind!r}")


class EpisodeRunner:
    """Decision-level episode stepping used by selector training.

    Every selector decision is one step toward the cap; Skip advances the
    ranking without a world step but still costs the step reward.
    """

    def __init__(self, cfg: BinConfig, push_planner, asp, seed: int,
                 heap_size: int, step_cap: int = ACTION_CAP):
        self.episode = SearchEpisode(cfg, push_planner, seed, heap_size)
        self.asp = asp
        self.step_cap = step_cap
        self.steps = 0
        self.rank_idx = 0
        self.finished = False
        self.outcome = None

    def _head_ooi(self) -> int | None:
        ranking = self.episode.ranking
        if not ranking:
            return None
        if self.rank_idx >= len(ranking):
            self.rank_idx = 0
        return ranking[self.rank_idx]

    def current_asp_observation(self) -> AspObservation | None:
        if self.finished:
            return None
        ooi = self._head_ooi()
        if ooi is None:
            self.finished, self.outcome = True, "target_lost"
            return None
        self._ctx = self.episode.context(ooi)
        return self._ctx.obs

    def step_asp(self, action: str) -> tuple[float, AspObservation | None, bool]:
        """Apply one selector decision; returns (reward, next obs, done)."""
        if self.finished:
            raise RuntimeError("episode finished")
        ctx = self._ctx
        executed = action
        outcome = "other"
        if action == "Grasp" and ctx.q_grasp < 0.0:
            executed, outcome = "Skip", "infeasible_selected"
        elif action == "Push" and ctx.q_push < 0.0:
            executed, outcome = "Skip", "infeasible_selected"

        if executed == "Skip":
            self.rank_idx += 1
            if self.rank_idx >= len(self.episode.ranking):
                self.rank_idx = 0
        else:
            outcome = self.episode.execute(executed, ctx)
            self.rank_idx = 0

        self.steps += 1
        reward = asp_reward(outcome)
        if outcome == "extracted_target":
            self.finished, self.outcome = True, "success"
        elif self.episode.target_lost:
            self.finished, self.outcome = True, "target_lost"
        elif self.steps >= self.step_cap:
            self.finished, self.outcome = True, "cap_exceeded"
        next_obs = self.current_asp_observation()
        return reward, next_obs, self.finished


# ---------------------------------------------------------------------------
# evaluation trials

@dataclass
class TrialRecord:
    seed: int
    actions: list[dict] = field(default_factory=list)
    outcome: str = "cap_exceeded"
    action_count: int = 0

    def to_dict(self) -> dict:
        return {"seed": self.seed, "actions": self.actions,
                "outcome": self.outcome, "action_count": self.action_count}


def _cmd_dict(cmd) -> dict | None:
    if cmd is None:
        return None
    d = dataclasses.asdict(cmd)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def make_push_planner(kind: str, push_policy=None):
    if kind == "fsp":
        return FspPushPlanner()
    if push_policy is None:
        raise ValueError("learned push planner requires a loaded push policy")
    return LearnedPushPlanner(push_policy)


def run_trial(setup: SetupSpec, trial_seed: int, cfg: BinConfig,
              push_planner, asp_policy: AspPolicy | None = None) -> TrialRecord:
    """One deterministic search trial under the given setup."""
    if setup.asp == "learned" and asp_policy is None:
        raise ValueError("learned selector requires a loaded selection policy")
    th = Thresholds(cfg.q_grasp_thresh, cfg.q_push_thresh)
    ep = SearchEpisode(cfg, push_planner, trial_seed, setup.heap_size)
    rec = TrialRecord(seed=trial_seed)

    while rec.action_count < setup.action_cap:
        if ep.target_delivered:
            rec.outcome = "success"
            return rec
        if ep.target_lost or not ep.ranking:
            rec.outcome = "target_lost"
            return rec
        acted = False
        for ooi in ep.ranking:  # one ranking pass; Skips inside it are free
            ctx = ep.context(ooi)
            if setup.asp == "heuristic":
                choice = heuristic_asp(ActionQuality(ctx.q_grasp, ctx.q_push), th)
            else:
                choice = asp_policy.act(ctx.obs, epsilon=0.0)
            executed, outcome = choice, "other"
            if choice == "Grasp" and ctx.q_grasp < 0.0:
                executed, outcome = "Skip", "infeasible_selected"
            elif choice == "Push" and ctx.q_push < 0.0:
                executed, outcome = "Skip", "infeasible_selected"
            if executed == "Skip":
                rec.actions.append({
                    "type": "Skip", "chosen": choice, "ooi": ooi,
                    "q_grasp": ctx.q_grasp, "q_push": ctx.q_push,
                    "command": None, "reward": asp_reward(outcome),
                    "charged": False})
                continue
            outcome = ep.execute(executed, ctx)
            rec.action_count += 1
            rec.actions.append({
                "type": executed, "chosen": choice, "ooi": ooi,
                "q_grasp": ctx.q_grasp, "q_push": ctx.q_push,
                "command": _cmd_dict(ctx.grasp_cmd if executed == "Grasp"
                                     else ctx.push_cmd),
                "reward": asp_reward(outcome), "charged": True})
            acted = True
            break
        if not acted:
            # ranking exhausted by Skips: charge one action slot
            rec.action_count += 1
            if rec.actions:
                rec.actions[-1]["charged"] = True
        if ep.target_delivered:
            rec.outcome = "success"
            return rec

    rec.outcome = "cap_exceeded"
    return rec


# ---------------------------------------------------------------------------
# benchmark matrix and reports

def _trial_seed(setup: SetupSpec, i: int) -> int:
    return setup.seed * 1_000_003 + setup.heap_size * 7919 + i


def run_setup(setup: SetupSpec, cfg: BinConfig, push_planner,
              asp_policy: AspPolicy | None, workers: int | None = None
              ) -> list[TrialRecord]:
    """All trials of one setup; parallel but order-deterministic."""
    workers = workers or int(os.environ.get("MS_THREADS", "0")) or os.cpu_count() or 1
    seeds = [_trial_seed(setup, i) for i in range(setup.trials)]
    if workers <= 1:
        return [run_trial(setup, s, cfg, push_planner, asp_policy) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            lambda s: run_trial(setup, s, cfg, push_planner, asp_policy), seeds))


def summarize_setup(setup: SetupSpec, records: list[TrialRecord]) -> dict:
    succ = [r.action_count for r in records if r.outcome == "success"]
    curve = []
    for k in range(1, setup.action_cap + 1):
        n_ok = sum(1 for r in records
                   if r.outcome == "success" and r.action_count <= k)
        curve.append(n_ok / len(records) if records else 0.0)
    n_grasp = sum(1 for r in records for a in r.actions if a["type"] == "Grasp")
    n_push = sum(1 for r in records for a in r.actions if a["type"] == "Push")
    n_exec = n_grasp + n_push
    return {
        "setup": setup.setup_id,
        "asp": setup.asp,
        "push": setup.push,
        "heap_size": setup.heap_size,
        "trials": setup.trials,
        "seed": setup.seed,
        "n_success": len(succ),
        "mean_actions": (sum(succ) / len(succ)) if succ else None,
        "std_actions": (float(np.std(succ)) if succ else None),
        "success_curve": curve,
        "proportions": ({"Grasp": n_grasp / n_exec, "Push": n_push / n_exec}
                        if n_exec else None),
        "outcomes": {o: sum(1 for r in records if r.outcome == o)
                     for o in ("success", "target_lost", "cap_exceeded")},
    }


def run_benchmark(specs: list[SetupSpec], cfg: BinConfig,
                  push_policy=None, asp_policy: AspPolicy | None = None,
                  workers: int | None = None) -> dict:
    setups_out, trials_out = [], {}
    for spec in specs:
        planner = make_push_planner(spec.push, push_policy)
        asp = asp_policy if spec.asp == "learned" else None
        if spec.asp == "learned" and asp_policy is None:
            raise ValueError("setup requires a loaded selection policy")
        records = run_setup(spec, cfg, planner, asp, workers)
        setups_out.append(summarize_setup(spec, records))
        trials_out[str(spec.setup_id)] = [r.to_dict() for r in records]
    return {
        "schema": "mechsearch.benchmark/1",
        "skip_accounting": "free within one ranking pass; one slot charged at exhaustion",
        "config": dataclasses.asdict(cfg),
        "setups": setups_out,
        "trials": trials_out,
    }


def report_emit(report: dict, out_dir: str | Path) -> dict[str, str]:
    """Write report JSON + Fig-style success-curve CSV; returns file map."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    rpath = out_dir / "report.json"
    rpath.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    files["report"] = str(rpath)
    rows = ["setup,actions,success_rate"]
    for s in report["setups"]:
        for k, v in enumerate(s["success_curve"], start=1):
            rows.append(f"{s['setup']},{k},{v}")
    cpath = out_dir / "success_curves.csv"
    cpath.write_text("\n".join(rows) + "\n")
    files["curves"] = str(cpath)
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps({"files": sorted(p.name for p in out_dir.iterdir()
                                                 if p.name != "manifest.json")},
                                indent=2, sort_keys=True) + "\n")
    files["manifest"] = str(mpath)
    return files
