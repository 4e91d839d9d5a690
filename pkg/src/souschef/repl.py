"""Interactive episode: a person plays the human side against the robot.

The terminal user picks their own actions from the legal set, answers the
robot's clarifying questions, and watches the belief shift after every event.
The session reuses the exact episode loop from the harness, so what you see
is what the simulated suites measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .harness import EpisodeEvent, EpisodeTrace, Runtime, run_episode
from .inquiry import Question
from .recipes import ExperimentSpec
from .sim_human import SimHumanStuckError
from .world import (ActionInstance, WorldState, legal_actions,
                    parse_template_key, wait_action)


class ReplQuit(SimHumanStuckError):
    """User asked to leave; the harness flushes the partial trace."""


@dataclass
class ReplIO:
    """Injectable input/output so sessions can be driven by tests."""

    read: Callable[[str], str] = input
    write: Callable[[str], None] = lambda s: print(s)


class _ConsoleHuman:
    """SimHuman stand-in that asks the terminal what to do."""

    script: Tuple[str, ...] = ()

    def __init__(self, stated_prefs: Sequence[str], runtime: Runtime, io: ReplIO):
        self.stated_prefs = tuple(stated_prefs)
        self.rt = runtime
        self.io = io

    def preferences_due(self, event_index: int) -> Tuple[str, ...]:
        return self.stated_prefs if event_index == 0 else ()

    def next_action(self, state: WorldState, executed) -> ActionInstance:
        legal = legal_actions(state, self.rt.spec, "human")
        keys = sorted(a.template_key() for a in legal)
        self.io.write("\nYour turn. Legal actions:")
        for i, key in enumerate(keys, 1):
            self.io.write(f"  {i:3d}. {key}")
        self.io.write("  (or: wait / quit)")
        while True:
            raw = self.io.read("action> ").strip()
            if raw == "quit":
                raise ReplQuit("user quit")
            if raw == "wait":
                return wait_action("human")
            if raw.isdigit() and 1 <= int(raw) <= len(keys):
                return parse_template_key(keys[int(raw) - 1], agent="human")
            if raw in keys:
                return parse_template_key(raw, agent="human")
            self.io.write(f"  ? {raw!r} is not an option")

    def answer(self, question: Question) -> str:
        self.io.write(f"\nRobot asks: {question.text}")
        for i, ans in enumerate(question.answers, 1):
            self.io.write(f"  {i}. {ans}")
        while True:
            raw = self.io.read("answer> ").strip()
            if raw == "quit":
                raise ReplQuit("user quit")
            if raw.isdigit() and 1 <= int(raw) <= len(question.answers):
                return question.answers[int(raw) - 1]
            if raw in question.answers:
                return raw
            self.io.write(f"  ? pick 1-{len(question.answers)}")


def _describe(event: EpisodeEvent, io: ReplIO) -> None:
    if event.kind == "question":
        io.write(f"[{event.index}] robot heard: {event.answer!r}")
    elif event.kind == "wait":
        io.write(f"[{event.index}] {event.agent} waits")
    else:
        io.write(f"[{event.index}] {event.agent}: {event.action}")
    if event.top_probs:
        top3 = ", ".join(f"{g}={p:.3f}" for g, p in event.top_probs[:3])
        io.write(f"      belief: {top3}")


def run_repl(runtime: Runtime, goal_id: str, prefs: Sequence[str],
             seed: int = 0, out_path: Optional[str] = None,
             io: Optional[ReplIO] = None) -> EpisodeTrace:
    """Play one episode interactively; returns (and optionally saves) the trace.

    ``goal_id`` is the dish the person privately intends to make; it anchors
    the correctness column of the trace but the robot never sees it directly.
    """
    io = io or ReplIO()
    if goal_id not in runtime.bank.goals:
        raise ValueError(f"unknown goal {goal_id!r}")
    prefs = list(prefs)
    pa = prefs[0] if prefs else ""
    pb = prefs[1] if len(prefs) > 1 else pa
    exp = ExperimentSpec(pref_a=pa, pref_b=pb, true_goal=goal_id, seed=seed)
    human = _ConsoleHuman([p for p in prefs if p], runtime, io)
    io.write(f"You are secretly making: {goal_id}"
             + (f"  (stated: {', '.join(p for p in prefs if p)})" if prefs else ""))
    trace = run_episode(runtime, exp, collect_probs=True, human=human,
                        on_event=lambda ev: _describe(ev, io))
    if trace.stuck:
        io.write("\nSession ended early; partial trace kept.")
    elif trace.completed:
        io.write("\nServed! Episode complete.")
    else:
        io.write("\nStopped at the step cap.")
    io.write(f"questions asked: {trace.questions_asked}, "
             f"robot steps: {trace.robot_steps}, extra: {trace.extra_steps}")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
            fh.write("\n")
        io.write(f"trace written to {out_path}")
    return trace
