"""Clarifying questions: when to interrupt, which question to ask, and how an
answer reshapes the belief.

A question is a likelihood table: one row per goal, one column per candidate
answer, rows normalized.  Question value is the expected entropy drop under a
uniform draw over answers; answers whose marginal probability is zero under
the current belief contribute nothing.  Interruption cost starts at its floor
(an unprompted human is cheap to interrupt), jumps to the ceiling right after
a question, and decays linearly back over the cooldown window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .attractor import AttractorField, pooled_frequency_field
from .belief import GoalBelief, SUPPORT_EPSILON
from .recipes import GoalBank, PolicyBank


class InquiryError(Exception):
    pass


@dataclass(frozen=True)
class Question:
    """Answer-likelihood table: rows[goal][j] = p(answers[j] | goal)."""

    question_id: str
    text: str
    answers: Tuple[str, ...]
    rows: Mapping[str, Tuple[float, ...]]

    def __post_init__(self):
        if len(self.answers) < 2:
            raise InquiryError(f"{self.question_id}: needs at least two answers")
        if len(set(self.answers)) != len(self.answers):
            raise InquiryError(f"{self.question_id}: duplicate answers")
        for g, row in self.rows.items():
            if len(row) != len(self.answers):
                raise InquiryError(f"{self.question_id}: row width mismatch for {g!r}")
            if any(v < 0.0 or v != v for v in row):
                raise InquiryError(f"{self.question_id}: bad row for {g!r}")
            if not math.isclose(sum(row), 1.0, rel_tol=0, abs_tol=1e-9):
                raise InquiryError(f"{self.question_id}: row for {g!r} not normalized")

    def answer_index(self, answer: str) -> int:
        try:
            return self.answers.index(answer)
        except ValueError:
            raise InquiryError(f"{self.question_id}: unknown answer {answer!r}")

    def likelihood(self, goal_id: str, answer: str) -> float:
        row = self.rows.get(goal_id)
        if row is None:
            raise InquiryError(f"{self.question_id}: no row for goal {goal_id!r}")
        return row[self.answer_index(answer)]


@dataclass(frozen=True)
class CostSchedule:
    """Interruption-cost curve parameters."""

    cost_max: float = 2.0
    cost_min: float = 0.2
    cooldown: int = 5

    def __post_init__(self):
        if self.cost_min < 0 or self.cost_max < self.cost_min:
            raise InquiryError("need 0 <= cost_min <= cost_max")
        if self.cooldown <= 0:
            raise InquiryError("cooldown must be positive")


def interruption_cost(schedule: CostSchedule, steps_since_last: Optional[int]) -> float:
    """Cost of asking now, given steps elapsed since the previous question.

    ``None`` means no question has been asked yet, which costs the floor;
    the cost then decays linearly from ceiling back to floor over the
    cooldown window.
    """
    if steps_since_last is None or steps_since_last >= schedule.cooldown:
        return schedule.cost_min
    if steps_since_last < 0:
        raise InquiryError("negative elapsed steps")
    frac = steps_since_last / schedule.cooldown
    return schedule.cost_max - (schedule.cost_max - schedule.cost_min) * frac


def should_ask(belief: GoalBelief, schedule: CostSchedule,
               steps_since_last: Optional[int]) -> bool:
    """Interrupt iff belief entropy exceeds the cost scaled by goal-count.

    The scale log2(#supported goals) makes the threshold mean something in
    entropy units: with the whole bank live even a cheap question clears it,
    while a pinned-down belief never does.
    """
    n = len(belief.support(SUPPORT_EPSILON))
    if n < 2:
        return False
    threshold = interruption_cost(schedule, steps_since_last) * math.log2(n)
    return belief.entropy() > threshold


def _posterior_entropy(belief: GoalBelief, question: Question, idx: int) -> Tuple[float, float]:
    """(marginal probability, entropy of the answer-conditioned posterior)."""
    weights = {}
    marginal = 0.0
    for g, p in belief.probs.items():
        if p <= 0.0:
            continue
        row = question.rows.get(g)
        if row is None:
            raise InquiryError(f"{question.question_id}: no row for goal {g!r}")
        w = p * row[idx]
        weights[g] = w
        marginal += w
    if marginal <= 0.0:
        return 0.0, 0.0
    h = 0.0
    for w in weights.values():
        if w > 0.0:
            q = w / marginal
            h -= q * math.log2(q)
    return marginal, h


def question_value(belief: GoalBelief, question: Question) -> float:
    """Expected entropy reduction, answers weighted uniformly.

    Impossible answers (zero marginal under the belief) drop out of the sum,
    so a question whose live answers each pin a single goal scores the full
    current entropy.  The value can go negative when the plausible answers
    would leave a flatter posterior than the prior.
    """
    h0 = belief.entropy()
    n = len(question.answers)
    expected = 0.0
    for idx in range(n):
        marginal, h = _posterior_entropy(belief, question, idx)
        if marginal > 0.0:
            expected += h / n
    return h0 - expected


def select_question(belief: GoalBelief,
                    questions: Sequence[Question]) -> Optional[Tuple[Question, float]]:
    """Highest-value question with strictly positive value, ties by id."""
    best: Optional[Tuple[Question, float]] = None
    for q in sorted(questions, key=lambda q: q.question_id):
        v = question_value(belief, q)
        if v <= 0.0:
            continue
        if best is None or v > best[1] + 1e-12:
            best = (q, v)
    return best


def apply_answer(belief: GoalBelief, question: Question, answer: str) -> GoalBelief:
    """Condition the belief on an answer.

    An answer that is impossible under the current belief (zero marginal)
    leaves the belief unchanged rather than producing an all-zero posterior.
    """
    idx = question.answer_index(answer)
    weights = {}
    total = 0.0
    for g, p in belief.probs.items():
        row = question.rows.get(g)
        if row is None:
            raise InquiryError(f"{question.question_id}: no row for goal {g!r}")
        w = p * row[idx]
        weights[g] = w
        total += w
    if total <= 0.0:
        return belief
    return GoalBelief.from_weights(weights)


def answer_field(answer: str, question: Question, bank: GoalBank,
                 policies: PolicyBank) -> Optional[AttractorField]:
    """Pooled action field an answer exerts during planning.

    Preference-valued answers pool the policies of goals carrying that
    preference; other answers pool the goals consistent with them.  Returns
    None when nothing in the bank is consistent.
    """
    source = f"{question.question_id}={answer}"
    if answer in bank.preferences:
        goal_ids = bank.goals_for_pref(answer)
    else:
        idx = question.answer_index(answer)
        goal_ids = [g for g in bank.goal_ids()
                    if question.rows[g][idx] > 0.0]
    if not goal_ids:
        return None
    pooled = policies.pooled(goal_ids)
    field = pooled_frequency_field(source, pooled)
    return AttractorField(source=source, scores=field.scores)


# -- question bank construction --------------------------------------------------

def load_question_templates(path: str) -> List[Tuple[str, ...]]:
    """Read question templates: one directive per line, '#' comments.

    Forms:
        dish_type "<text>"
        ingredient <item> "<text>"
        appliance <name> "<text>"
        either_or <pref_a> <pref_b> "<text>"
    """
    templates: List[Tuple[str, ...]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if '"' not in line:
                raise InquiryError(f"line {line_no}: missing quoted text")
            head, _, rest = line.partition('"')
            text = rest.rstrip()
            if not text.endswith('"'):
                raise InquiryError(f"line {line_no}: unterminated text")
            text = text[:-1]
            parts = head.split()
            if not parts:
                raise InquiryError(f"line {line_no}: missing directive")
            kind = parts[0]
            args = parts[1:]
            expected = {"dish_type": 0, "ingredient": 1, "appliance": 1, "either_or": 2}
            if kind not in expected:
                raise InquiryError(f"line {line_no}: unknown directive {kind!r}")
            if len(args) != expected[kind]:
                raise InquiryError(f"line {line_no}: {kind} takes {expected[kind]} argument(s)")
            templates.append((kind, *args, text))
    return templates


def build_question_bank(bank: GoalBank,
                        templates: Sequence[Tuple[str, ...]]) -> Tuple[Question, ...]:
    """Instantiate questions against a goal bank, sorted by question id."""
    questions: List[Question] = []
    for tpl in templates:
        kind = tpl[0]
        text = tpl[-1]
        if kind == "dish_type":
            answers = tuple(bank.recipe_types())
            rows = {}
            for gid in bank.goal_ids():
                row = [0.0] * len(answers)
                row[answers.index(bank.goals[gid].recipe_type)] = 1.0
                rows[gid] = tuple(row)
            questions.append(Question("type", text, answers, rows))
        elif kind == "ingredient":
            item = tpl[1]
            answers = (f"with {item}", f"no {item}")
            rows = {}
            for gid in bank.goal_ids():
                has = item in bank.goals[gid].ingredients()
                rows[gid] = (1.0, 0.0) if has else (0.0, 1.0)
            questions.append(Question(f"ing:{item}", text, answers, rows))
        elif kind == "appliance":
            name = tpl[1]
            answers = (f"uses {name}", f"no {name}")
            rows = {}
            for gid in bank.goal_ids():
                has = bank.goals[gid].uses_appliance(name)
                rows[gid] = (1.0, 0.0) if has else (0.0, 1.0)
            questions.append(Question(f"app:{name}", text, answers, rows))
        elif kind == "either_or":
            a, b = tpl[1], tpl[2]
            for p in (a, b):
                if p not in bank.preferences:
                    raise InquiryError(f"either_or uses unknown preference {p!r}")
            answers = (a, b)
            rows = {}
            for gid in bank.goal_ids():
                prefs = bank.goal_prefs[gid]
                has_a, has_b = a in prefs, b in prefs
                if has_a and not has_b:
                    rows[gid] = (1.0, 0.0)
                elif has_b and not has_a:
                    rows[gid] = (0.0, 1.0)
                else:
                    rows[gid] = (0.5, 0.5)
            questions.append(Question(f"pref:{a}|{b}", text, answers, rows))
        else:
            raise InquiryError(f"unknown template kind {kind!r}")
    questions.sort(key=lambda q: q.question_id)
    ids = [q.question_id for q in questions]
    if len(set(ids)) != len(ids):
        raise InquiryError("duplicate question ids")
    return tuple(questions)
