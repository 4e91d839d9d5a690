"""Scripted human partner for closed-loop episodes.

The human commits to one goal, samples a concrete step order for it, states
preferences up front (or with a delay), executes the next pending step on
each of their turns, and answers questions truthfully by picking the most
likely answer under their goal.  Steps already performed by either agent, or
whose effects already hold, are silently skipped, which is how the human
cooperates with a helpful robot instead of redoing its work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Set, Tuple

from .inquiry import Question
from .recipes import Goal, linearizations
from .seeding import stable_rng, stable_seed
from .world import (ActionInstance, DomainSpec, WorldState, effects_hold,
                    is_legal, parse_template_key, wait_action)


class SimHumanStuckError(Exception):
    """The scripted next step has become impossible in the current state."""


@dataclass(frozen=True)
class HumanProfile:
    """Behavioral knobs.  Defaults give the fully cooperative, exact human."""

    answer_noise: float = 0.0
    second_pref_delay: Optional[int] = None  # event index to reveal pref #2, None = both at start

    def __post_init__(self):
        if not (0.0 <= self.answer_noise <= 1.0):
            raise ValueError("answer_noise must be a probability")
        if self.second_pref_delay is not None and self.second_pref_delay < 1:
            raise ValueError("second_pref_delay must be at least 1")


class SimHuman:
    """One episode's human: a goal, a sampled script, and stated preferences."""

    def __init__(self, goal: Goal, stated_prefs: Sequence[str], spec: DomainSpec,
                 seed: int, profile: HumanProfile = HumanProfile()):
        self.goal = goal
        self.spec = spec
        self.stated_prefs = tuple(stated_prefs)
        self.profile = profile
        script_seed = stable_seed(f"human-script:{seed}:{goal.goal_id}")
        self.script: Tuple[str, ...] = tuple(
            linearizations(goal.network, cap=1, seed=script_seed)[0])
        self._rng = stable_rng(f"human-answers:{seed}:{goal.goal_id}")
        self._pos = 0

    def preferences_due(self, event_index: int) -> Tuple[str, ...]:
        """Preferences the human states at this event index."""
        delay = self.profile.second_pref_delay
        if delay is None:
            return self.stated_prefs if event_index == 0 else ()
        if event_index == 0:
            return self.stated_prefs[:1]
        if event_index == delay:
            return self.stated_prefs[1:]
        return ()

    def next_action(self, state: WorldState,
                    executed_templates: Set[str]) -> ActionInstance:
        """The human's move on their turn: next unfinished script step, or wait.

        A step is skipped for good if either agent already performed it or its
        effects already hold.  If the next needed step has unmet
        preconditions, the collaboration is broken and we raise rather than
        improvise.
        """
        while self._pos < len(self.script):
            key = self.script[self._pos]
            action = parse_template_key(key, agent="human")
            if key in executed_templates or effects_hold(state, action, self.spec):
                self._pos += 1
                continue
            if is_legal(state, action, self.spec):
                return action
            raise SimHumanStuckError(
                f"{self.goal.goal_id}: step {key} is no longer executable")
        return wait_action("human")

    def remaining_steps(self, executed_templates: Set[str]) -> int:
        return sum(1 for key in self.script[self._pos:]
                   if key not in executed_templates)

    def answer(self, question: Question) -> str:
        """Most likely answer under the true goal; optional noise flips it."""
        row = question.rows.get(self.goal.goal_id)
        if row is None:
            raise SimHumanStuckError(
                f"{question.question_id} has no row for {self.goal.goal_id}")
        best = max(row)
        truthful = min(a for a, p in zip(question.answers, row) if p >= best - 1e-12)
        if self.profile.answer_noise > 0.0 and self._rng.random() < self.profile.answer_noise:
            others = [a for a in question.answers if a != truthful]
            return self._rng.choice(others)
        return truthful
