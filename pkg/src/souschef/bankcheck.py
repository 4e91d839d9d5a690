"""Invariant audit over a goal bank, its domain, and its question set.

Run via ``souschef bank check``.  Checks are deliberately independent of how
the data was authored: they re-derive everything from the loaded artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Sequence, Tuple

from .inquiry import Question
from .recipes import (BankError, GoalBank, generate_experiments,
                      linearizations, validate_network)
from .world import DomainError, DomainSpec, replay


@dataclass
class CheckReport:
    lines: List[str] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)

    def ok(self, text: str) -> None:
        self.lines.append(f"  ok: {text}")

    def info(self, text: str) -> None:
        self.lines.append(f"      {text}")

    def fail(self, text: str) -> None:
        self.problems.append(text)
        self.lines.append(f"  PROBLEM: {text}")


def run_checks(bank: GoalBank, spec: DomainSpec,
               questions: Sequence[Question], replay_cap: int = 3) -> CheckReport:
    rep = CheckReport()
    goal_ids = bank.goal_ids()

    # network structure
    bad = 0
    for gid in goal_ids:
        try:
            validate_network(bank.goals[gid].network)
        except BankError as exc:
            bad += 1
            rep.fail(f"{gid}: invalid network ({exc})")
    if not bad:
        rep.ok(f"{len(goal_ids)} goal networks validate")

    lengths = [bank.goals[g].length for g in goal_ids]
    rep.info(f"step counts: min={min(lengths)} max={max(lengths)} "
             f"mean={sum(lengths) / len(lengths):.2f}")

    # preference links
    orphans = [p for p in bank.preferences if not bank.goals_for_pref(p)]
    for p in orphans:
        rep.fail(f"preference {p!r} matches no goal")
    bare = [g for g in goal_ids if not bank.goal_prefs[g]]
    for g in bare:
        rep.fail(f"goal {g} carries no preferences")
    unknown = sorted({p for g in goal_ids for p in bank.goal_prefs[g]}
                     - set(bank.preferences))
    for p in unknown:
        rep.fail(f"goal_prefs references undeclared preference {p!r}")
    if not (orphans or bare or unknown):
        rep.ok(f"{len(bank.preferences)} preferences all linked both ways")

    # executability: sampled linearizations must replay to the served state
    stuck = 0
    for gid in goal_ids:
        for i, seq in enumerate(linearizations(bank.goals[gid].network,
                                               cap=replay_cap, seed=7)):
            try:
                final = replay(seq, spec)
            except DomainError as exc:
                stuck += 1
                rep.fail(f"{gid}: linearization {i} not executable ({exc})")
                continue
            if not final.is_terminal():
                stuck += 1
                rep.fail(f"{gid}: linearization {i} ends before serving")
    if not stuck:
        rep.ok(f"replayed {replay_cap} linearizations per goal to completion")

    # questions cover every goal and jointly separate co-plausible goals
    missing = 0
    for q in questions:
        for gid in goal_ids:
            if gid not in q.rows:
                missing += 1
                rep.fail(f"question {q.question_id} has no row for {gid}")
    if not missing:
        rep.ok(f"{len(questions)} questions cover all goals")

    experiments = generate_experiments(bank, seed=0)
    rep.info(f"{len(experiments)} experiments generated")
    co_plausible: set[Tuple[str, str]] = set()
    for exp in experiments:
        inter = sorted(set(bank.goals_for_pref(exp.pref_a))
                       & set(bank.goals_for_pref(exp.pref_b)))
        for a, b in combinations(inter, 2):
            co_plausible.add((a, b))
    inseparable = []
    for a, b in sorted(co_plausible):
        if all(q.rows[a] == q.rows[b] for q in questions):
            inseparable.append((a, b))
    for a, b in inseparable:
        rep.fail(f"no question separates {a} from {b}, which share an experiment")
    if not inseparable:
        rep.ok(f"every co-plausible goal pair ({len(co_plausible)}) is separable")

    # experiment sanity
    off = [e for e in experiments
           if e.true_goal not in (set(bank.goals_for_pref(e.pref_a))
                                  & set(bank.goals_for_pref(e.pref_b)))]
    for e in off:
        rep.fail(f"experiment {e.key}: truth {e.true_goal} outside intersection")
    if not off:
        rep.ok("every experiment's truth lies in its preference intersection")
    return rep
