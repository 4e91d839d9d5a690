"""Method configurations: which knowledge sources and behaviors a robot uses.

A method is a JSON document naming the goal-candidate source, the attractor
field source, the belief machinery, question settings, planner shape, and the
act gate.  The bundled configurations cover the ablation ladder from the full
system down to a passive observer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dc_fields
from importlib import resources
from typing import List, Optional

from .inquiry import CostSchedule
from .planner import PlannerConfig


class MethodError(Exception):
    pass


GOAL_SOURCES = ("bank", "judge")
FIELD_SOURCES = ("policy", "judge")
MODES = ("planner", "judge_step", "passive")


@dataclass(frozen=True)
class MethodConfig:
    name: str
    mode: str = "planner"
    goal_source: str = "bank"
    field_source: str = "policy"
    use_classifier: bool = True
    use_pref_prior: bool = True
    pref_miss_factor: float = 0.02
    questions: bool = False
    cost_max: float = 2.0
    cost_min: float = 0.2
    cooldown: int = 5
    act_threshold: float = 0.6
    continuation_filter: bool = False
    divergence_bonus: float = 0.0
    horizon: int = 2
    top_k: int = 4
    include_human_scores: bool = True
    w_goal: float = 1.0
    w_pref: float = 1.0
    requires_judge: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise MethodError(f"unknown mode {self.mode!r}")
        if self.goal_source not in GOAL_SOURCES:
            raise MethodError(f"unknown goal_source {self.goal_source!r}")
        if self.field_source not in FIELD_SOURCES:
            raise MethodError(f"unknown field_source {self.field_source!r}")
        if not (0.0 <= self.act_threshold <= 1.0):
            raise MethodError("act_threshold must lie in [0, 1]")
        if self.goal_source == "judge" and self.use_classifier:
            raise MethodError("the sequence classifier needs a fixed goal bank")

    def cost_schedule(self) -> CostSchedule:
        return CostSchedule(cost_max=self.cost_max, cost_min=self.cost_min,
                            cooldown=self.cooldown)

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(horizon=self.horizon, top_k=self.top_k,
                             include_human_scores=self.include_human_scores)

    def replace(self, **overrides) -> "MethodConfig":
        data = {f.name: getattr(self, f.name) for f in dc_fields(self)}
        data.update(overrides)
        return MethodConfig(**data)


def method_from_dict(data: dict) -> MethodConfig:
    if "name" not in data:
        raise MethodError("method config needs a 'name'")
    known = {f.name for f in dc_fields(MethodConfig)}
    unknown = set(data) - known
    if unknown:
        raise MethodError(f"unknown method keys: {', '.join(sorted(unknown))}")
    return MethodConfig(**data)


def load_method(path: str) -> MethodConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MethodError(f"{path}: invalid JSON ({exc})")
    return method_from_dict(data)


def bundled_method_names() -> List[str]:
    root = resources.files("souschef").joinpath("data/methods")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled_method(name: str) -> MethodConfig:
    path = resources.files("souschef").joinpath(f"data/methods/{name}.json")
    if not path.is_file():
        raise MethodError(
            f"no bundled method {name!r}; available: {', '.join(bundled_method_names())}")
    return method_from_dict(json.loads(path.read_text(encoding="utf-8")))
