"""Independent brute-force reference implementations used by the tests.

Everything here recomputes results from first principles with no shared code
paths into the package (beyond value types), so agreement is meaningful.
"""

import math
import random
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from souschef.belief import GoalBelief
from souschef.inquiry import Question
from souschef.planner import PlannerConfig, ScoringContext
from souschef.world import DomainSpec, WorldState, legal_actions, step


def entropy_bits(probs: Sequence[float]) -> float:
    return -sum(p * math.log2(p) for p in probs if p > 0.0)


def bayes_posterior(belief: Mapping[str, float], question: Question,
                    answer: str) -> Optional[Dict[str, float]]:
    idx = question.answers.index(answer)
    weights = {g: belief[g] * question.rows[g][idx] for g in belief}
    total = sum(weights.values())
    if total <= 0.0:
        return None
    return {g: w / total for g, w in weights.items()}


def question_value_oracle(question: Question, belief: Mapping[str, float]) -> float:
    """Expected entropy reduction with a uniform answer marginal."""
    prior_h = entropy_bits(list(belief.values()))
    expected = 0.0
    for answer in question.answers:
        post = bayes_posterior(belief, question, answer)
        if post is None:
            continue
        expected += entropy_bits(list(post.values())) / len(question.answers)
    return prior_h - expected


def select_question_oracle(belief: Mapping[str, float],
                           candidates: Sequence[Question]
                           ) -> Optional[Tuple[Question, float]]:
    """Best-value question, positive values only, lexicographic-min id ties."""
    scored = [(question_value_oracle(q, belief), q) for q in candidates]
    positive = [(v, q) for v, q in scored if v > 0.0]
    if not positive:
        return None
    vmax = max(v for v, _ in positive)
    tied = [q for v, q in positive if v >= vmax - 1e-12]
    best = min(tied, key=lambda q: q.question_id)
    value = next(v for v, q in scored if q is best)
    return best, value


def exhaustive_plan(state: WorldState, spec: DomainSpec, config: PlannerConfig,
                    ctx: ScoringContext, robot_agent: str = "robot"
                    ) -> Optional[Tuple[float, str, Tuple[str, ...]]]:
    """Min-cost branch over the *full* legal-action tree (no top-K pruning).

    Matches the planner exactly whenever top_k is at least the maximum
    number of legal actions at any node.  Returns (cost, first action key,
    branch keys) or None when the root has no children.
    """
    branches: List[Tuple[float, str, Tuple[str, ...]]] = []

    def walk(st: WorldState, depth: int, cost: float, keys: Tuple[str, ...]):
        if depth >= config.horizon or st.is_terminal():
            if keys:
                branches.append((cost, keys[0], keys))
            return
        acts = legal_actions(st, spec, st.turn)
        if st.turn == robot_agent and ctx.candidate_filter is not None:
            acts = [a for a in acts if ctx.candidate_filter(a)]
        if not acts:
            if keys:
                branches.append((cost, keys[0], keys))
            return
        for action in acts:
            charged = (config.include_human_scores or st.turn == robot_agent)
            delta = -ctx.score(action) if charged else 0.0
            walk(step(st, action, spec), depth + 1, cost + delta,
                 keys + (action.template_key(),))

    walk(state, 0, 0.0, ())
    if not branches:
        return None
    return min(branches)


def enumerate_linearizations(steps: Sequence[str],
                             chains: Sequence[Tuple[int, int]],
                             cliques: Sequence[Sequence[int]]
                             ) -> List[Tuple[str, ...]]:
    """All valid orders by backtracking over the full constraint set.

    The constraints are the documented ones: chain edges, plus declaration
    order for every pair of steps that do not share a clique.  Tractable only
    for small networks (the result list is materialized in full).
    """
    n = len(steps)
    clique_of: List[Optional[int]] = [None] * n
    for ci, members in enumerate(cliques):
        for m in members:
            clique_of[m] = ci
    before = {(a, b) for a, b in chains}
    for i in range(n):
        for j in range(i + 1, n):
            if clique_of[i] is None or clique_of[i] != clique_of[j]:
                before.add((i, j))
    preds: Dict[int, set] = {i: set() for i in range(n)}
    for a, b in before:
        preds[b].add(a)

    out: List[Tuple[str, ...]] = []

    def walk(placed: Tuple[int, ...], done: set):
        if len(placed) == n:
            out.append(tuple(steps[i] for i in placed))
            return
        for v in range(n):
            if v not in done and preds[v] <= done:
                walk(placed + (v,), done | {v})

    walk((), set())
    return out


def random_planner_instance(rng: random.Random, spec: DomainSpec
                            ) -> Tuple[WorldState, PlannerConfig, ScoringContext]:
    """Random reachable robot-turn state plus a random scoring setup.

    Scores are drawn from a small grid so cost ties actually occur and the
    lexicographic tie-breaking gets exercised.
    """
    from souschef.attractor import AttractorField, ScoreWeights
    from souschef.world import wait_action

    state = spec.initial_state()
    for _ in range(rng.randint(0, 6)):
        acts = legal_actions(state, spec, state.turn)
        action = rng.choice(acts) if acts else wait_action(state.turn)
        state = step(state, action, spec)
        if state.is_terminal():
            break
    while state.turn != "robot":
        acts = legal_actions(state, spec, state.turn)
        action = rng.choice(acts) if acts else wait_action(state.turn)
        state = step(state, action, spec)

    templates = spec.templates()
    goals = [f"g{i}" for i in range(rng.randint(1, 3))]
    fields = {}
    for g in goals:
        scores = {}
        for key in templates:
            if rng.random() < 0.4:
                continue
            scores[key] = rng.choice([0.0, 0.25, 0.5, 1.0, 1.0, 2.0])
        fields[g] = AttractorField(source=g, scores=scores)
    raw = [rng.random() for _ in goals]
    total = sum(raw)
    probs = {g: r / total for g, r in zip(goals, raw)}

    pref_fields = {}
    if rng.random() < 0.3:
        pref_fields["p0"] = AttractorField(
            source="p0", scores={k: 0.5 for k in rng.sample(templates, 3)})

    bonus = {}
    if rng.random() < 0.3:
        bonus = {rng.choice(templates): rng.choice([0.25, 1.0])}

    candidate_filter = None
    if rng.random() < 0.25:
        banned_verb = rng.choice(["mix", "pour", "turn_on"])
        candidate_filter = lambda a, v=banned_verb: a.verb != v

    ctx = ScoringContext(goal_fields=fields, belief_probs=probs,
                         pref_fields=pref_fields,
                         weights=ScoreWeights(w_goal=1.0, w_pref=1.0),
                         candidate_filter=candidate_filter, bonus=bonus)
    config = PlannerConfig(horizon=rng.randint(1, 3), top_k=5,
                           include_human_scores=rng.random() < 0.7)
    return state, config, ctx


def random_belief(rng: random.Random, goal_ids: Sequence[str]) -> GoalBelief:
    weights = {g: rng.random() + 1e-6 for g in goal_ids}
    if len(goal_ids) > 2 and rng.random() < 0.3:
        dead = rng.choice(goal_ids)
        weights[dead] = 0.0
    total = sum(weights.values())
    return GoalBelief({g: w / total for g, w in weights.items()})


def random_question(rng: random.Random, qid: str, goal_ids: Sequence[str],
                    n_answers: int) -> Question:
    answers = tuple(f"a{i}" for i in range(n_answers))
    rows = {}
    for g in goal_ids:
        if rng.random() < 0.15:
            row = [0.0] * n_answers
            row[rng.randrange(n_answers)] = 1.0
        else:
            raw = [rng.random() for _ in range(n_answers)]
            s = sum(raw)
            row = [v / s for v in raw]
        rows[g] = tuple(row)
    return Question(qid, f"question {qid}?", answers, rows)
