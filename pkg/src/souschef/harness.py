"""Closed-loop episodes and experiment suites.

An episode pits one robot method against a scripted human pursuing a hidden
goal.  Turns alternate; on its turn the robot may ask one gated clarifying
question, then either executes the first action of its cheapest lookahead
branch (if the act gate clears) or waits.  Every event snapshots the belief,
which is what the prediction metrics are computed from.

A suite runs one episode per generated experiment (preference pair plus true
goal) and aggregates metrics into CSV/JSON artifacts that are byte-identical
across reruns with the same seed and configuration.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .attractor import (AttractorField, CachingJudge, HttpJudge, Judge,
                        MockJudge, ScoreWeights, field_from_judge,
                        field_from_policy_bank)
from .belief import (GoalBelief, GoalProposer, SequenceClassifier, START,
                     pref_prior, summarize_interaction, update_from_action)
from .inquiry import (Question, apply_answer, answer_field, build_question_bank,
                      load_question_templates, select_question, should_ask)
from .methods import MethodConfig
from .planner import ScoringContext, select_action
from .recipes import (ExperimentSpec, GoalBank, PolicyBank, build_policy_bank,
                      forced_predecessors, generate_experiments)
from .sim_human import HumanProfile, SimHuman, SimHumanStuckError
from .world import (ActionInstance, DomainSpec, WAIT_VERB, WorldState,
                    legal_actions, step, wait_action)


class HarnessError(Exception):
    pass


# -- judges --------------------------------------------------------------------

@dataclass(frozen=True)
class JudgeSpec:
    """Picklable description of how to construct a judge inside a worker."""

    kind: str = "mock"  # "mock" | "http"
    endpoint: Optional[str] = None
    cache_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise HarnessError(f"unknown judge kind {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise HarnessError("http judge needs an endpoint")


def build_judge(jspec: JudgeSpec, bank: GoalBank) -> Judge:
    if jspec.kind == "http":
        judge: Judge = HttpJudge(jspec.endpoint)
    else:
        judge = MockJudge.from_goal_bank(bank)
    if jspec.cache_path:
        judge = CachingJudge(judge, cache_path=jspec.cache_path)
    return judge


# -- bundled data ----------------------------------------------------------------

def bundled_question_templates() -> List[Tuple[str, ...]]:
    path = resources.files("souschef").joinpath("data/questions.txt")
    with resources.as_file(path) as p:
        return load_question_templates(str(p))


# -- runtime: one method wired against one bank ----------------------------------

@dataclass
class Runtime:
    """Suite-level immutables shared by every episode of one method."""

    bank: GoalBank
    spec: DomainSpec
    method: MethodConfig
    questions: Tuple[Question, ...]
    policies: Optional[PolicyBank]
    classifier: Optional[SequenceClassifier]
    goal_fields: Dict[str, AttractorField]
    pref_fields: Dict[str, AttractorField]
    judge: Optional[Judge]
    goal_steps: Dict[str, Tuple[str, ...]]
    goal_preds: Dict[str, List[Set[int]]]
    _answer_fields: Dict[Tuple[str, str], Optional[AttractorField]] = field(
        default_factory=dict)

    def valid_next(self, goal_id: str, executed: Set[str]) -> Set[str]:
        """Templates that legitimately come next for one goal's network."""
        steps = self.goal_steps[goal_id]
        preds = self.goal_preds[goal_id]
        done = {i for i, s in enumerate(steps) if s in executed}
        return {s for i, s in enumerate(steps)
                if i not in done and all(p in done for p in preds[i])}

    def answer_attractor(self, question: Question, answer: str) -> Optional[AttractorField]:
        key = (question.question_id, answer)
        if key not in self._answer_fields:
            if self.policies is not None:
                self._answer_fields[key] = answer_field(
                    answer, question, self.bank, self.policies)
            elif self.judge is not None:
                f = field_from_judge(f"{question.question_id}={answer}",
                                     self.spec.templates(),
                                     context=f"{question.text} {answer}",
                                     judge=self.judge)
                self._answer_fields[key] = f
            else:
                self._answer_fields[key] = None
        return self._answer_fields[key]


def build_runtime(bank: GoalBank, spec: DomainSpec, method: MethodConfig,
                  judge: Optional[Judge] = None,
                  questions: Optional[Sequence[Question]] = None,
                  policy_cap: int = 10, policy_seed: int = 0,
                  classifier: Optional[SequenceClassifier] = None) -> Runtime:
    if method.requires_judge and judge is None:
        raise HarnessError(f"method {method.name!r} needs a judge")
    needs_policies = (method.field_source == "policy" or method.use_classifier
                      or (method.questions and method.goal_source == "bank"))
    policies = None
    if needs_policies:
        policies = build_policy_bank(bank, domain=None, cap=policy_cap,
                                     seed=policy_seed, validate=False)
    if method.use_classifier and classifier is None:
        classifier = SequenceClassifier().fit(
            {g: policies.sequences(g) for g in bank.goal_ids()})
    templates = spec.templates()
    goal_fields: Dict[str, AttractorField] = {}
    if method.goal_source == "bank":
        for gid in bank.goal_ids():
            if method.field_source == "policy":
                goal_fields[gid] = field_from_policy_bank(gid, bank, policies)
            else:
                goal_fields[gid] = field_from_judge(
                    gid, templates, context=bank.goals[gid].title, judge=judge)
    pref_fields: Dict[str, AttractorField] = {}
    if method.w_pref > 0.0:
        for pref in sorted(bank.preferences):
            if method.field_source == "policy":
                pref_fields[pref] = field_from_policy_bank(pref, bank, policies)
            else:
                pref_fields[pref] = field_from_judge(
                    pref, templates,
                    context="a quality the person wants in the dish", judge=judge)
    goal_steps = {}
    goal_preds = {}
    for gid in bank.goal_ids():
        net = bank.goals[gid].network
        goal_steps[gid] = net.steps
        goal_preds[gid] = forced_predecessors(net)
    qbank = tuple(questions) if questions is not None else ()
    if method.questions and not qbank:
        qbank = build_question_bank(bank, bundled_question_templates())
    return Runtime(bank=bank, spec=spec, method=method, questions=qbank,
                   policies=policies, classifier=classifier,
                   goal_fields=goal_fields, pref_fields=pref_fields,
                   judge=judge, goal_steps=goal_steps, goal_preds=goal_preds)


# -- belief engines ---------------------------------------------------------------

class _ClosedBelief:
    """Belief over the fixed bank: prior x evidence x answers, in log space.

    Evidence comes from the sequence classifier when available, otherwise
    from attractor-field likelihoods.  Answers can zero goals out for good;
    an answer that would kill everything is skipped entirely.
    """

    def __init__(self, runtime: Runtime):
        self.rt = runtime
        self.goal_ids = runtime.bank.goal_ids()
        self.log_prior = {g: 0.0 for g in self.goal_ids}
        self.evidence = {g: 0.0 for g in self.goal_ids}
        self.answer_ll = {g: 0.0 for g in self.goal_ids}
        self.dead: Set[str] = set()
        self._prev_token = START
        self._cached: Optional[GoalBelief] = None

    def set_prefs(self, prefs: Sequence[str]) -> None:
        if self.rt.method.use_pref_prior and prefs:
            prior = pref_prior(self.rt.bank, prefs,
                               miss_factor=self.rt.method.pref_miss_factor)
            self.log_prior = {g: math.log(prior.prob(g)) for g in self.goal_ids}
        else:
            self.log_prior = {g: 0.0 for g in self.goal_ids}
        self._cached = None

    def observe_human(self, action: ActionInstance) -> None:
        key = action.template_key()
        if self.rt.classifier is not None:
            for g in self.goal_ids:
                self.evidence[g] += self.rt.classifier.step_log_likelihood(
                    g, self._prev_token, key)
            self._prev_token = key
        else:
            for g in self.goal_ids:
                pull = self.rt.goal_fields[g].score(key)
                self.evidence[g] += math.log(pull + 0.01)
        self._cached = None

    def apply_answer(self, question: Question, answer: str) -> bool:
        idx = question.answer_index(answer)
        would_die = set()
        survivor = False
        for g in self.goal_ids:
            if g in self.dead:
                continue
            if question.rows[g][idx] <= 0.0:
                would_die.add(g)
            else:
                survivor = True
        if not survivor:
            return False
        for g in self.goal_ids:
            if g in self.dead or g in would_die:
                continue
            self.answer_ll[g] += math.log(question.rows[g][idx])
        self.dead |= would_die
        self._cached = None
        return True

    def belief(self) -> GoalBelief:
        if self._cached is None:
            logs = {g: self.log_prior[g] + self.evidence[g] + self.answer_ll[g]
                    for g in self.goal_ids if g not in self.dead}
            peak = max(logs.values())
            weights = {g: math.exp(lw - peak) for g, lw in logs.items()}
            for g in self.dead:
                weights[g] = 0.0
            self._cached = GoalBelief.from_weights(weights)
        return self._cached


class _OpenBelief:
    """Belief over judge-proposed candidate names (open goal set)."""

    def __init__(self, runtime: Runtime):
        self.rt = runtime
        self.proposer = GoalProposer(runtime.judge)
        self.fields: Dict[str, AttractorField] = {}
        self._belief: Optional[GoalBelief] = None

    def refresh(self, summary: str) -> None:
        probs = self.proposer.refresh(summary)
        for name in probs:
            if name not in self.fields:
                self.fields[name] = field_from_judge(
                    name, self.rt.spec.templates(), context=summary,
                    judge=self.rt.judge)
        self._belief = GoalBelief.from_weights(probs) if probs else None

    def observe_human(self, action: ActionInstance) -> None:
        if self._belief is None:
            return
        self._belief = update_from_action(self._belief, action, self.fields)
        self.proposer.probs = dict(self._belief.probs)

    def dynamic_question(self, question: Question) -> Question:
        """Re-key the question's rows onto the current candidate set."""
        names = sorted(self._belief.probs) if self._belief else []
        rows = {}
        for name in names:
            if name in question.rows:
                rows[name] = question.rows[name]
                continue
            raw = self.rt.judge.score(name, list(question.answers),
                                      context=question.text)
            vals = [max(0.0, raw.get(a, 0.0)) for a in question.answers]
            total = sum(vals)
            if total <= 0.0:
                rows[name] = tuple(1.0 / len(vals) for _ in vals)
            else:
                rows[name] = tuple(v / total for v in vals)
        return Question(question.question_id, question.text,
                        question.answers, rows)

    def apply_answer(self, question: Question, answer: str) -> bool:
        if self._belief is None:
            return False
        dq = self.dynamic_question(question)
        updated = apply_answer(self._belief, dq, answer)
        if updated is self._belief:
            return False
        self._belief = updated
        self.proposer.probs = dict(updated.probs)
        return True

    def belief(self) -> Optional[GoalBelief]:
        return self._belief


# -- episodes --------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeEvent:
    index: int
    kind: str                      # "action" | "wait" | "question"
    agent: str
    action: Optional[str] = None   # template key for action/wait events
    question_id: Optional[str] = None
    answer: Optional[str] = None
    question_gain: Optional[float] = None
    belief_argmax: Optional[str] = None
    belief_entropy: float = 0.0
    correct: bool = False
    top_probs: Optional[Tuple[Tuple[str, float], ...]] = None


@dataclass
class EpisodeTrace:
    method: str
    experiment_key: str
    goal_id: str
    pref_a: str
    pref_b: str
    seed: int
    ground_truth_len: int
    events: List[EpisodeEvent] = field(default_factory=list)
    completed: bool = False
    stuck: bool = False
    substantive_steps: int = 0
    robot_steps: int = 0
    extra_steps: int = 0
    questions_asked: int = 0

    def to_dict(self) -> dict:
        data = asdict(self)
        for ev in data["events"]:
            ev["belief_entropy"] = round(ev["belief_entropy"], 6)
            if ev["question_gain"] is not None:
                ev["question_gain"] = round(ev["question_gain"], 6)
            if ev["top_probs"] is not None:
                ev["top_probs"] = [[g, round(p, 6)] for g, p in ev["top_probs"]]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_episode(runtime: Runtime, experiment: ExperimentSpec,
                profile: HumanProfile = HumanProfile(),
                max_steps_factor: int = 3,
                collect_probs: bool = False,
                human: Optional[SimHuman] = None,
                on_event: Optional[Callable[["EpisodeEvent"], None]] = None
                ) -> EpisodeTrace:
    """Run one full collaboration episode, deterministically.

    ``human`` may be any object with the SimHuman interface (the REPL passes
    a stdin-driven one); ``on_event`` observes each recorded event live.
    """
    bank, spec, method = runtime.bank, runtime.spec, runtime.method
    truth = experiment.true_goal
    goal = bank.goals[truth]
    if human is None:
        human = SimHuman(goal, (experiment.pref_a, experiment.pref_b), spec,
                         seed=experiment.seed, profile=profile)
    trace = EpisodeTrace(method=method.name, experiment_key=experiment.key,
                         goal_id=truth, pref_a=experiment.pref_a,
                         pref_b=experiment.pref_b, seed=experiment.seed,
                         ground_truth_len=goal.length)

    open_case = method.goal_source == "judge"
    beliefs = _OpenBelief(runtime) if open_case else _ClosedBelief(runtime)
    schedule = method.cost_schedule()
    weights = ScoreWeights(w_goal=method.w_goal, w_pref=method.w_pref)

    state = spec.initial_state()
    executed: Set[str] = set()
    human_actions: List[ActionInstance] = []
    stated_prefs: List[str] = []
    answers_given: List[str] = []
    utter_fields: Dict[str, AttractorField] = {}
    asked_ids: Set[str] = set()
    last_asked: Optional[int] = None

    step_cap = max_steps_factor * goal.length
    event_cap = 10 * goal.length + 60

    def snapshot() -> Tuple[Optional[str], float, bool, Optional[Tuple]]:
        bel = beliefs.belief()
        if bel is None:
            return None, 0.0, False, None
        top = None
        if collect_probs:
            ranked = sorted(bel.probs.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
            top = tuple(ranked)
        return bel.argmax(), bel.entropy(), bel.argmax() == truth, top

    def record(kind: str, agent: str, action: Optional[str] = None,
               question_id: Optional[str] = None, answer: Optional[str] = None,
               question_gain: Optional[float] = None) -> None:
        argmax, entropy, correct, top = snapshot()
        trace.events.append(EpisodeEvent(
            index=len(trace.events), kind=kind, agent=agent, action=action,
            question_id=question_id, answer=answer, question_gain=question_gain,
            belief_argmax=argmax, belief_entropy=entropy, correct=correct,
            top_probs=top))
        if on_event is not None:
            on_event(trace.events[-1])

    def summary_text() -> str:
        return summarize_interaction(
            [a for a in human_actions] + [], stated_prefs, answers_given)

    def robot_decide() -> Optional[ActionInstance]:
        if method.mode == "passive":
            return None
        bel = beliefs.belief()
        if bel is None:
            return None
        if method.mode == "judge_step":
            legal = legal_actions(state, spec, "robot")
            if not legal:
                return None
            keys = [a.template_key() for a in legal]
            scores = runtime.judge.score(
                summary_text(), keys, context="pick the robot's next cooking step")
            ranked = sorted(legal, key=lambda a: (-scores[a.template_key()],
                                                  a.template_key()))
            best = ranked[0]
            if scores[best.template_key()] < method.act_threshold:
                return None
            return best
        support = bel.support()
        goal_fields = beliefs.fields if open_case else runtime.goal_fields
        candidate_filter = None
        valid_by_goal: Dict[str, Set[str]] = {}
        if method.continuation_filter:
            allowed: Set[str] = set()
            for g in support:
                if g in runtime.goal_steps:
                    valid_by_goal[g] = runtime.valid_next(g, executed)
                    allowed |= valid_by_goal[g]
            candidate_filter = lambda a: a.template_key() in allowed
        bonus: Dict[str, float] = {}
        if method.divergence_bonus > 0.0 and len(support) > 1:
            keys: Set[str] = set()
            for g in support:
                keys.update(goal_fields[g].scores)
            for key in keys:
                vals = [goal_fields[g].score(key) for g in support]
                bonus[key] = method.divergence_bonus * (max(vals) - min(vals))
        ctx = ScoringContext(goal_fields=goal_fields, belief_probs=bel.probs,
                             pref_fields=utter_fields, weights=weights,
                             candidate_filter=candidate_filter, bonus=bonus)
        choice = select_action(state, spec, method.planner_config(), ctx)
        if choice is None:
            return None
        key = choice.action.template_key()
        if method.continuation_filter:
            mass = sum(bel.prob(g) for g, valid in valid_by_goal.items()
                       if key in valid)
        else:
            mass = sum(bel.prob(g) * goal_fields[g].score(key)
                       for g in support if g in goal_fields)
        if mass < method.act_threshold:
            return None
        return choice.action

    def maybe_ask() -> None:
        nonlocal last_asked
        if not method.questions or not runtime.questions:
            return
        bel = beliefs.belief()
        if bel is None:
            return
        elapsed = None if last_asked is None else len(trace.events) - last_asked
        if not should_ask(bel, schedule, elapsed):
            return
        candidates = [q for q in runtime.questions if q.question_id not in asked_ids]
        if open_case:
            candidates = [beliefs.dynamic_question(q) for q in candidates]
        sel = select_question(bel, candidates)
        if sel is None:
            return
        question, gain = sel
        original = next(q for q in runtime.questions
                        if q.question_id == question.question_id)
        answer = human.answer(original)
        beliefs.apply_answer(original if not open_case else question, answer)
        af = runtime.answer_attractor(original, answer)
        if af is not None and method.w_pref > 0.0:
            utter_fields[af.source] = af
        asked_ids.add(question.question_id)
        answers_given.append(answer)
        trace.questions_asked += 1
        record("question", "robot", question_id=question.question_id,
               answer=answer, question_gain=gain)
        last_asked = len(trace.events) - 1

    try:
        while not state.is_terminal():
            if trace.substantive_steps >= step_cap or len(trace.events) >= event_cap:
                break
            if state.turn == "human":
                due = human.preferences_due(len(trace.events))
                if due:
                    stated_prefs.extend(due)
                    if not open_case:
                        beliefs.set_prefs(stated_prefs)
                    if method.w_pref > 0.0 and not open_case:
                        for pref in due:
                            if pref in runtime.pref_fields:
                                utter_fields[pref] = runtime.pref_fields[pref]
                action = human.next_action(state, executed)
                state = step(state, action, spec)
                if action.verb == WAIT_VERB:
                    record("wait", "human")
                    continue
                executed.add(action.template_key())
                human_actions.append(action)
                trace.substantive_steps += 1
                beliefs.observe_human(action)
                record("action", "human", action=action.template_key())
            else:
                if open_case:
                    beliefs.refresh(summary_text())
                maybe_ask()
                action = robot_decide()
                if action is None:
                    state = step(state, wait_action("robot"), spec)
                    record("wait", "robot")
                    continue
                key = action.template_key()
                on_script = key in runtime.valid_next(truth, executed)
                state = step(state, action, spec)
                executed.add(key)
                trace.substantive_steps += 1
                trace.robot_steps += 1
                if not on_script:
                    trace.extra_steps += 1
                record("action", "robot", action=key)
    except SimHumanStuckError:
        trace.stuck = True

    trace.completed = state.is_terminal() and set(human.script) <= executed
    return trace


# -- metrics ----------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeMetrics:
    top1_pct: float
    first_correct_pct: float
    last_incorrect_pct: float
    extra_steps: int
    questions: int
    completed: bool
    stuck: bool
    robot_steps: int
    substantive_steps: int
    ground_truth_len: int
    converged_after_first_answer: bool
    final_entropy: float


def compute_metrics(trace: EpisodeTrace) -> EpisodeMetrics:
    """Prediction-timeline metrics over every event snapshot.

    first_correct is the 1-based position of the first correct prediction as
    a percentage of the timeline (100.0 if never correct); last_incorrect is
    the position of the last wrong prediction (0.0 if never wrong).
    """
    flags = [ev.correct for ev in trace.events]
    n = len(flags)
    if n == 0:
        top1, first_pct, last_pct = 0.0, 100.0, 0.0
    else:
        top1 = 100.0 * sum(flags) / n
        first_pct = 100.0
        for i, ok in enumerate(flags):
            if ok:
                first_pct = 100.0 * (i + 1) / n
                break
        last_pct = 0.0
        for i in range(n - 1, -1, -1):
            if not flags[i]:
                last_pct = 100.0 * (i + 1) / n
                break
    q_indices = [ev.index for ev in trace.events if ev.kind == "question"]
    if q_indices:
        qi = q_indices[0]
        converged = all(ev.correct for ev in trace.events[qi:])
    else:
        converged = True
    final_entropy = trace.events[-1].belief_entropy if trace.events else 0.0
    return EpisodeMetrics(
        top1_pct=top1, first_correct_pct=first_pct, last_incorrect_pct=last_pct,
        extra_steps=trace.extra_steps, questions=trace.questions_asked,
        completed=trace.completed, stuck=trace.stuck,
        robot_steps=trace.robot_steps, substantive_steps=trace.substantive_steps,
        ground_truth_len=trace.ground_truth_len,
        converged_after_first_answer=converged, final_entropy=final_entropy)


EPISODE_CSV_COLUMNS = (
    "experiment", "goal", "pref_a", "pref_b", "method", "seed",
    "completed", "stuck", "substantive_steps", "robot_steps",
    "ground_truth_len", "extra_steps", "questions",
    "top1_pct", "first_correct_pct", "last_incorrect_pct",
    "converged_after_first_answer", "final_entropy",
)


def episode_row(trace: EpisodeTrace, metrics: EpisodeMetrics) -> Dict[str, object]:
    return {
        "experiment": trace.experiment_key,
        "goal": trace.goal_id,
        "pref_a": trace.pref_a,
        "pref_b": trace.pref_b,
        "method": trace.method,
        "seed": trace.seed,
        "completed": trace.completed,
        "stuck": trace.stuck,
        "substantive_steps": metrics.substantive_steps,
        "robot_steps": metrics.robot_steps,
        "ground_truth_len": metrics.ground_truth_len,
        "extra_steps": metrics.extra_steps,
        "questions": metrics.questions,
        "top1_pct": metrics.top1_pct,
        "first_correct_pct": metrics.first_correct_pct,
        "last_incorrect_pct": metrics.last_incorrect_pct,
        "converged_after_first_answer": metrics.converged_after_first_answer,
        "final_entropy": metrics.final_entropy,
    }


def _format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_episode_csv(path: str, rows: Sequence[Mapping[str, object]]) -> None:
    ordered = sorted(rows, key=lambda r: str(r["experiment"]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EPISODE_CSV_COLUMNS)
        for row in ordered:
            writer.writerow([_format_cell(row[c]) for c in EPISODE_CSV_COLUMNS])


def summarize_rows(rows: Sequence[Mapping[str, object]], method: str,
                   seed: int, wall_seconds: float) -> Dict[str, object]:
    n = len(rows)
    if n == 0:
        raise HarnessError("no episodes to summarize")

    def mean(key: str) -> float:
        return sum(float(r[key]) for r in rows) / n

    def rate(key: str) -> float:
        return sum(1 for r in rows if r[key]) / n

    return {
        "method": method,
        "seed": seed,
        "episodes": n,
        "mean_extra_steps": round(mean("extra_steps"), 6),
        "mean_questions": round(mean("questions"), 6),
        "mean_top1_pct": round(mean("top1_pct"), 6),
        "mean_first_correct_pct": round(mean("first_correct_pct"), 6),
        "mean_last_incorrect_pct": round(mean("last_incorrect_pct"), 6),
        "completion_rate": round(rate("completed"), 6),
        "stuck_rate": round(rate("stuck"), 6),
        "convergence_rate": round(rate("converged_after_first_answer"), 6),
        "mean_robot_steps": round(mean("robot_steps"), 6),
        "mean_substantive_steps": round(mean("substantive_steps"), 6),
        "wall_seconds": round(wall_seconds, 3),
    }


# -- suite runner ------------------------------------------------------------------

_WORKER: Dict[str, object] = {}


def _worker_init(bank: GoalBank, spec: DomainSpec, method: MethodConfig,
                 jspec: Optional[JudgeSpec], questions: Tuple[Question, ...],
                 policy_cap: int, policy_seed: int, profile: HumanProfile,
                 max_steps_factor: int) -> None:
    judge = build_judge(jspec, bank) if jspec is not None else None
    runtime = build_runtime(bank, spec, method, judge=judge,
                            questions=questions or None,
                            policy_cap=policy_cap, policy_seed=policy_seed)
    _WORKER["runtime"] = runtime
    _WORKER["profile"] = profile
    _WORKER["factor"] = max_steps_factor


def _worker_run(experiment: ExperimentSpec) -> Dict[str, object]:
    runtime: Runtime = _WORKER["runtime"]  # type: ignore[assignment]
    trace = run_episode(runtime, experiment, profile=_WORKER["profile"],
                        max_steps_factor=_WORKER["factor"])
    return episode_row(trace, compute_metrics(trace))


@dataclass
class SuiteResult:
    rows: List[Dict[str, object]]
    summary: Dict[str, object]


def run_suite(bank: GoalBank, spec: DomainSpec, method: MethodConfig,
              seed: int = 0, jspec: Optional[JudgeSpec] = None,
              out_dir: Optional[str] = None, parallel: int = 1,
              limit: Optional[int] = None,
              policy_cap: int = 10, policy_seed: int = 0,
              profile: HumanProfile = HumanProfile(),
              max_steps_factor: int = 3,
              progress: Optional[Callable[[int, int], None]] = None) -> SuiteResult:
    """One episode per generated experiment; aggregates and optionally writes."""
    t0 = time.monotonic()
    if method.requires_judge and jspec is None:
        jspec = JudgeSpec(kind="mock")
    experiments = generate_experiments(bank, seed=seed)
    if limit is not None:
        experiments = experiments[:limit]
    if not experiments:
        raise HarnessError("the goal bank generates no experiments")
    questions: Tuple[Question, ...] = ()
    if method.questions:
        questions = build_question_bank(bank, bundled_question_templates())
    rows: List[Dict[str, object]] = []
    if parallel <= 1:
        _worker_init(bank, spec, method, jspec, questions, policy_cap,
                     policy_seed, profile, max_steps_factor)
        for i, exp in enumerate(experiments):
            rows.append(_worker_run(exp))
            if progress is not None:
                progress(i + 1, len(experiments))
    else:
        with ProcessPoolExecutor(
                max_workers=parallel, initializer=_worker_init,
                initargs=(bank, spec, method, jspec, questions, policy_cap,
                          policy_seed, profile, max_steps_factor)) as pool:
            for i, row in enumerate(pool.map(_worker_run, experiments, chunksize=8)):
                rows.append(row)
                if progress is not None:
                    progress(i + 1, len(experiments))
    rows.sort(key=lambda r: str(r["experiment"]))
    summary = summarize_rows(rows, method.name, seed, time.monotonic() - t0)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_episode_csv(os.path.join(out_dir, "episodes.csv"), rows)
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return SuiteResult(rows=rows, summary=summary)


def format_summary_table(summaries: Sequence[Mapping[str, object]]) -> str:
    """Fixed-width comparison table across method summaries."""
    cols = ("method", "episodes", "mean_extra_steps", "mean_questions",
            "mean_top1_pct", "completion_rate", "convergence_rate")
    widths = {c: max(len(c), *(len(_format_cell(s[c])) for s in summaries))
              for c in cols}
    lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
    lines.append("  ".join("-" * widths[c] for c in cols))
    for s in summaries:
        lines.append("  ".join(_format_cell(s[c]).ljust(widths[c]) for c in cols))
    return "\n".join(lines)


SWEEP_CSV_COLUMNS = ("cost_max", "mean_questions", "mean_extra_steps",
                     "mean_top1_pct", "convergence_rate")


def sweep_question_cost(bank: GoalBank, spec: DomainSpec, method: MethodConfig,
                        cost_maxes: Sequence[float], seed: int = 0,
                        out_dir: Optional[str] = None, parallel: int = 1,
                        limit: Optional[int] = None,
                        progress: Optional[Callable[[int, int], None]] = None
                        ) -> List[Dict[str, object]]:
    """Re-run the suite at several interruption-cost ceilings."""
    out_rows = []
    for i, cmax in enumerate(cost_maxes):
        variant = method.replace(cost_max=float(cmax))
        result = run_suite(bank, spec, variant, seed=seed, parallel=parallel,
                           limit=limit)
        out_rows.append({
            "cost_max": float(cmax),
            "mean_questions": result.summary["mean_questions"],
            "mean_extra_steps": result.summary["mean_extra_steps"],
            "mean_top1_pct": result.summary["mean_top1_pct"],
            "convergence_rate": result.summary["convergence_rate"],
        })
        if progress is not None:
            progress(i + 1, len(cost_maxes))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "sweep.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SWEEP_CSV_COLUMNS)
            for row in out_rows:
                writer.writerow([_format_cell(row[c]) for c in SWEEP_CSV_COLUMNS])
    return out_rows
