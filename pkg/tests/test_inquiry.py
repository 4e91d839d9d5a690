"""Question gating, valuation, selection, and answer conditioning."""

import math
import random

import pytest

from souschef.belief import GoalBelief
from souschef.inquiry import (
    CostSchedule,
    InquiryError,
    Question,
    answer_field,
    apply_answer,
    build_question_bank,
    interruption_cost,
    load_question_templates,
    question_value,
    select_question,
    should_ask,
)
from souschef.recipes import build_policy_bank

from oracles import (
    bayes_posterior,
    question_value_oracle,
    random_belief,
    random_question,
    select_question_oracle,
)


def separating_question(qid: str = "sep") -> Question:
    return Question(qid, "warm or chilled?", ("warm", "chilled"),
                    {"oatmeal": (1.0, 0.0), "parfait": (0.0, 1.0)})


def flat_question(qid: str = "flat") -> Question:
    return Question(qid, "anything?", ("yes", "no"),
                    {"oatmeal": (0.5, 0.5), "parfait": (0.5, 0.5)})


# -- cost schedule ----------------------------------------------------------------

def test_cost_linear_interpolation_midpoint():
    sched = CostSchedule(cost_max=2.0, cost_min=0.5, cooldown=10)
    assert interruption_cost(sched, 5) == pytest.approx(1.25, abs=1e-12)


def test_cost_immediately_after_asking_is_ceiling():
    sched = CostSchedule(cost_max=2.0, cost_min=0.5, cooldown=10)
    assert interruption_cost(sched, 0) == pytest.approx(2.0)


def test_cost_past_cooldown_and_never_asked_is_floor():
    sched = CostSchedule(cost_max=2.0, cost_min=0.5, cooldown=10)
    assert interruption_cost(sched, 10) == pytest.approx(0.5)
    assert interruption_cost(sched, 37) == pytest.approx(0.5)
    assert interruption_cost(sched, None) == pytest.approx(0.5)


def test_cost_decays_monotonically_over_cooldown():
    sched = CostSchedule(cost_max=2.0, cost_min=0.2, cooldown=5)
    costs = [interruption_cost(sched, dt) for dt in range(0, 7)]
    assert costs[0] == pytest.approx(2.0)
    assert all(a >= b for a, b in zip(costs, costs[1:]))
    assert costs[-1] == pytest.approx(0.2)


def test_cost_schedule_validation():
    with pytest.raises(InquiryError):
        CostSchedule(cost_max=0.1, cost_min=0.5, cooldown=5)
    with pytest.raises(InquiryError):
        CostSchedule(cost_max=2.0, cost_min=-0.1, cooldown=5)
    with pytest.raises(InquiryError):
        CostSchedule(cost_max=2.0, cost_min=0.2, cooldown=0)
    sched = CostSchedule()
    with pytest.raises(InquiryError):
        interruption_cost(sched, -1)


# -- ask gate ---------------------------------------------------------------------

def test_point_mass_belief_never_asks():
    belief = GoalBelief({"a": 1.0, "b": 0.0, "c": 0.0})
    sched = CostSchedule(cost_max=2.0, cost_min=0.0, cooldown=5)
    assert not should_ask(belief, sched, None)


def test_uniform_eight_goals_asks_when_scaled_cost_below_entropy():
    belief = GoalBelief.uniform([f"g{i}" for i in range(8)])
    # entropy is exactly 3 bits; pick a cost whose log2(8)-scaled value is 2.9
    sched = CostSchedule(cost_max=2.9 / 3.0, cost_min=0.1, cooldown=5)
    assert should_ask(belief, sched, 0)


def test_single_supported_goal_no_ask():
    belief = GoalBelief({"only": 1.0})
    sched = CostSchedule(cost_max=0.0, cost_min=0.0, cooldown=5)
    assert not should_ask(belief, sched, None)


def test_expensive_question_suppressed():
    belief = GoalBelief.uniform(["a", "b"])
    sched = CostSchedule(cost_max=5.0, cost_min=4.0, cooldown=5)
    assert not should_ask(belief, sched, 1)


# -- question value ---------------------------------------------------------------

def test_perfectly_separating_binary_question_worth_one_bit():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    assert question_value(belief, separating_question()) == pytest.approx(1.0, abs=1e-12)


def test_identical_rows_worth_nothing():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    assert question_value(belief, flat_question()) == pytest.approx(0.0, abs=1e-12)


def test_value_can_go_negative_under_uniform_answer_weighting():
    # A near-certain belief: the unlikely answer would flatten the posterior,
    # and uniform answer weighting overweights it.
    belief = GoalBelief({"a": 0.999, "b": 0.001})
    q = Question("q", "?", ("x", "y"),
                 {"a": (0.999, 0.001), "b": (0.001, 0.999)})
    v = question_value(belief, q)
    assert v < 0.0
    assert v == pytest.approx(question_value_oracle(q, belief.probs), abs=1e-12)


def test_missing_goal_row_raises():
    belief = GoalBelief.uniform(["a", "b"])
    q = Question("q", "?", ("x", "y"), {"a": (1.0, 0.0)})
    with pytest.raises(InquiryError):
        question_value(belief, q)


# -- selection --------------------------------------------------------------------

def test_separating_question_beats_uninformative():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    sel = select_question(belief, [flat_question(), separating_question()])
    assert sel is not None
    question, gain = sel
    assert question.question_id == "sep"
    assert gain == pytest.approx(1.0)


def test_single_informative_candidate_selected():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    sel = select_question(belief, [separating_question()])
    assert sel is not None and sel[0].question_id == "sep"


def test_no_positive_value_candidates_selects_nothing():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    assert select_question(belief, [flat_question()]) is None


def test_value_ties_break_to_lexicographically_smaller_id():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    sel = select_question(belief, [separating_question("zz"), separating_question("aa")])
    assert sel is not None and sel[0].question_id == "aa"


# -- answers ----------------------------------------------------------------------

def test_warm_answer_shifts_uniform_to_likelihood_ratio():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    q = Question("warmth", "warm or chilled?", ("warm", "chilled"),
                 {"oatmeal": (0.9, 0.1), "parfait": (0.1, 0.9)})
    post = apply_answer(belief, q, "warm")
    assert post.probs["oatmeal"] == pytest.approx(0.9, abs=1e-12)
    assert post.probs["parfait"] == pytest.approx(0.1, abs=1e-12)


def test_uniform_likelihood_answer_leaves_belief_unchanged():
    belief = GoalBelief({"oatmeal": 0.7, "parfait": 0.3})
    post = apply_answer(belief, flat_question(), "yes")
    assert post.probs["oatmeal"] == pytest.approx(0.7)
    assert post.probs["parfait"] == pytest.approx(0.3)


def test_impossible_answer_leaves_belief_unchanged():
    belief = GoalBelief({"oatmeal": 1.0, "parfait": 0.0})
    post = apply_answer(belief, separating_question(), "chilled")
    assert post.probs == belief.probs


def test_unknown_answer_rejected():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    with pytest.raises(InquiryError):
        apply_answer(belief, separating_question(), "lukewarm")


def test_answered_question_not_reselected_once_valueless():
    belief = GoalBelief.uniform(["oatmeal", "parfait"])
    post = apply_answer(belief, separating_question(), "warm")
    assert post.probs["oatmeal"] == pytest.approx(1.0)
    sel = select_question(post, [separating_question(), flat_question()])
    assert sel is None


# -- randomized agreement with the brute-force oracle -----------------------------

def test_question_value_matches_oracle_on_randomized_instances():
    rng = random.Random("inquiry-value")
    for trial in range(150):
        n_goals = rng.randint(2, 6)
        n_answers = rng.randint(2, 4)
        goals = [f"g{i}" for i in range(n_goals)]
        belief = random_belief(rng, goals)
        q = random_question(rng, f"q{trial}", goals, n_answers)
        assert question_value(belief, q) == pytest.approx(
            question_value_oracle(q, belief.probs), abs=1e-9)


def test_select_question_matches_oracle_on_randomized_instances():
    rng = random.Random("inquiry-select")
    for trial in range(100):
        n_goals = rng.randint(2, 6)
        goals = [f"g{i}" for i in range(n_goals)]
        belief = random_belief(rng, goals)
        candidates = [random_question(rng, f"q{trial}-{j}", goals, rng.randint(2, 4))
                      for j in range(rng.randint(1, 10))]
        got = select_question(belief, candidates)
        want = select_question_oracle(belief.probs, candidates)
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert got[0].question_id == want[0].question_id
            assert got[1] == pytest.approx(want[1], abs=1e-9)


def test_apply_answer_matches_direct_bayes_on_randomized_instances():
    rng = random.Random("inquiry-bayes")
    for trial in range(150):
        n_goals = rng.randint(2, 6)
        goals = [f"g{i}" for i in range(n_goals)]
        belief = random_belief(rng, goals)
        q = random_question(rng, f"q{trial}", goals, rng.randint(2, 4))
        answer = rng.choice(q.answers)
        post = apply_answer(belief, q, answer)
        want = bayes_posterior(belief.probs, q, answer)
        if want is None:
            assert post.probs == belief.probs
            continue
        assert sum(post.probs.values()) == pytest.approx(1.0, abs=1e-9)
        for g in goals:
            assert post.probs[g] == pytest.approx(want[g], abs=1e-9)


def test_posterior_entropy_composition_matches_oracle():
    rng = random.Random("inquiry-compose")
    for trial in range(60):
        goals = [f"g{i}" for i in range(rng.randint(2, 6))]
        belief = random_belief(rng, goals)
        q = random_question(rng, f"q{trial}", goals, 3)
        answer = rng.choice(q.answers)
        want = bayes_posterior(belief.probs, q, answer)
        if want is None:
            continue
        post = apply_answer(belief, q, answer)
        oracle_h = -sum(p * math.log2(p) for p in want.values() if p > 0.0)
        assert post.entropy() == pytest.approx(oracle_h, abs=1e-9)


# -- question table validation ----------------------------------------------------

def test_question_requires_two_distinct_answers():
    with pytest.raises(InquiryError):
        Question("q", "?", ("only",), {"a": (1.0,)})
    with pytest.raises(InquiryError):
        Question("q", "?", ("x", "x"), {"a": (0.5, 0.5)})


def test_question_rows_must_normalize():
    with pytest.raises(InquiryError):
        Question("q", "?", ("x", "y"), {"a": (0.6, 0.6)})
    with pytest.raises(InquiryError):
        Question("q", "?", ("x", "y"), {"a": (-0.2, 1.2)})
    with pytest.raises(InquiryError):
        Question("q", "?", ("x", "y"), {"a": (1.0,)})


# -- templates and bank-backed construction ----------------------------------------

def test_template_parsing_roundtrip(tmp_path):
    path = tmp_path / "questions.txt"
    path.write_text(
        "# comment\n"
        'dish_type "What kind of dish?"\n'
        'ingredient oats "Should it have oats?"\n'
        'appliance stove "Will you use the stove?"  # trailing\n'
        'either_or warm chilled "Warm or chilled?"\n'
    )
    templates = load_question_templates(str(path))
    assert templates == [
        ("dish_type", "What kind of dish?"),
        ("ingredient", "oats", "Should it have oats?"),
        ("appliance", "stove", "Will you use the stove?"),
        ("either_or", "warm", "chilled", "Warm or chilled?"),
    ]


@pytest.mark.parametrize("line", [
    "dish_type no quotes",
    'unknown_kind "text"',
    'ingredient "missing item"',
    'either_or warm "only one pref"',
    'dish_type "unterminated',
])
def test_template_parse_errors(tmp_path, line):
    path = tmp_path / "questions.txt"
    path.write_text(line + "\n")
    with pytest.raises(InquiryError):
        load_question_templates(str(path))


def test_bank_questions_have_full_coverage_and_sorted_ids(bank, questions):
    assert list(q.question_id for q in questions) == sorted(
        q.question_id for q in questions)
    for q in questions:
        assert set(q.rows) == set(bank.goal_ids())


def test_dish_type_question_rows_are_one_hot(bank, questions):
    q = next(q for q in questions if q.question_id == "type")
    assert set(q.answers) == set(bank.recipe_types())
    for gid in bank.goal_ids():
        row = q.rows[gid]
        assert sum(row) == pytest.approx(1.0)
        assert row[q.answers.index(bank.goals[gid].recipe_type)] == 1.0


def test_either_or_rejects_unknown_preference(bank):
    with pytest.raises(InquiryError):
        build_question_bank(bank, [("either_or", "warm", "nonexistent-pref", "?")])


def test_duplicate_question_ids_rejected(bank):
    with pytest.raises(InquiryError):
        build_question_bank(bank, [("dish_type", "first?"), ("dish_type", "second?")])


# -- answer fields ----------------------------------------------------------------

def test_preference_answer_field_pools_matching_goals(bank):
    policies = build_policy_bank(bank, cap=3, seed=0)
    q = build_question_bank(bank, [("either_or", "warm", "chilled", "Warm or chilled?")])[0]
    fld = answer_field("warm", q, bank, policies)
    assert fld is not None
    pooled = policies.pooled(bank.goals_for_pref("warm"))
    seen = {k for seq in pooled for k in seq}
    for key in seen:
        assert fld.scores.get(key, 0.0) > 0.0
    assert all(0.0 <= v <= 1.0 for v in fld.scores.values())


def test_inconsistent_answer_yields_no_field(bank):
    policies = build_policy_bank(bank, cap=2, seed=0)
    rows = {g: (1.0, 0.0) for g in bank.goal_ids()}
    q = Question("never", "?", ("always", "nohit"), rows)
    assert answer_field("nohit", q, bank, policies) is None
