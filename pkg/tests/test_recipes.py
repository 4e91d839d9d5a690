"""Task networks, linearization machinery, the bundled bank, and experiments."""

import itertools
import random
import statistics

import pytest

from souschef.recipes import (
    BankError,
    BankParseError,
    ExperimentSpec,
    GoalBank,
    NetworkContradictionError,
    TaskNetwork,
    build_policy_bank,
    count_linearizations,
    forced_predecessors,
    generate_experiments,
    linearizations,
    parse_goal_bank,
    valid_next_steps,
    validate_network,
    write_goal_bank,
)

from oracles import enumerate_linearizations


def net(steps, chains=(), cliques=()):
    return TaskNetwork(tuple(steps), tuple(chains), tuple(cliques))


# -- linearizations -----------------------------------------------------------------

def test_pure_chain_has_single_order():
    n = net("abc", chains=((0, 1), (1, 2)))
    assert linearizations(n) == [("a", "b", "c")]
    assert count_linearizations(n) == 1


def test_declaration_order_pins_unrelated_steps():
    # no chains, no cliques: order is still fixed by declaration
    n = net("abc")
    assert linearizations(n) == [("a", "b", "c")]


def test_three_step_clique_has_six_orders():
    n = net("abc", cliques=((0, 1, 2),))
    seqs = linearizations(n)
    assert len(seqs) == 6
    assert len(set(seqs)) == 6
    assert count_linearizations(n) == 6
    assert set(seqs) == set(itertools.permutations("abc"))


def test_chain_inside_clique_restricts_orders():
    n = net("abc", chains=((0, 2),), cliques=((0, 1, 2),))
    seqs = linearizations(n)
    # a before c, b floats: abc, bac, abc? -> exactly the 3 orders with a<c
    assert len(seqs) == 3
    for seq in seqs:
        assert seq.index("a") < seq.index("c")


def test_linearizations_match_bruteforce_on_synthetic_nets():
    rng = random.Random("lin-oracle")
    for trial in range(40):
        n_steps = rng.randint(3, 7)
        steps = [f"s{i}" for i in range(n_steps)]
        cliques = []
        i = 0
        while i < n_steps:
            size = rng.choice([1, 1, 2, 3])
            if size > 1 and i + size <= n_steps:
                cliques.append(tuple(range(i, i + size)))
            i += max(size, 1)
        chains = []
        for members in cliques:
            if len(members) >= 2 and rng.random() < 0.5:
                a, b = sorted(rng.sample(members, 2))
                chains.append((a, b))
        network = net(steps, chains=tuple(chains), cliques=tuple(cliques))
        got = linearizations(network)
        want = enumerate_linearizations(steps, chains, cliques)
        assert sorted(got) == sorted(want), f"trial {trial}"
        assert count_linearizations(network) == len(want)


def test_bundled_smallest_network_matches_bruteforce(bank):
    n = bank.goals["smoothie_banana"].network
    got = linearizations(n)
    want = enumerate_linearizations(n.steps, n.chains, n.cliques)
    assert sorted(got) == sorted(want)
    assert count_linearizations(n) == len(want) == 90


def test_capped_sampling_is_seeded_and_distinct(bank):
    n = bank.goals["stew_vegetable"].network
    a = linearizations(n, cap=12, seed=4)
    b = linearizations(n, cap=12, seed=4)
    c = linearizations(n, cap=12, seed=5)
    assert a == b
    assert len(a) == 12
    assert len(set(a)) == 12
    assert a != c
    preds = forced_predecessors(n)
    for seq in a:
        pos = {s: i for i, s in enumerate(seq)}
        for j, step_key in enumerate(n.steps):
            for p in preds[j]:
                assert pos[n.steps[p]] < pos[step_key]


def test_cap_above_total_returns_everything():
    n = net("abc", cliques=((0, 1, 2),))
    assert len(linearizations(n, cap=50)) == 6


# -- network validation ---------------------------------------------------------------

def test_validate_rejects_bad_structures():
    with pytest.raises(BankError):
        validate_network(net("ab", cliques=((0, 5),)))
    with pytest.raises(BankError):
        validate_network(net("abc", cliques=((0, 1), (1, 2))))
    with pytest.raises(BankError):
        validate_network(net("ab", cliques=((0,),)))
    with pytest.raises(NetworkContradictionError):
        validate_network(net("ab", chains=((0, 0),)))
    with pytest.raises(NetworkContradictionError):
        validate_network(net("abc", chains=((2, 0),)))
    with pytest.raises(NetworkContradictionError):
        validate_network(net("abc", chains=((0, 1), (1, 0)), cliques=((0, 1, 2),)))
    with pytest.raises(BankError):
        validate_network(net("ab", chains=((0, 9),)))


# -- bundled bank --------------------------------------------------------------------

def test_bundled_bank_shape(bank):
    assert len(bank.goal_ids()) == 30
    assert len(bank.recipe_types()) == 6
    assert len(bank.preferences) == 50
    for gid in bank.goal_ids():
        assert bank.goal_prefs[gid], f"{gid} has no preferences"
    for pref in bank.preferences:
        assert bank.goals_for_pref(pref), f"{pref} maps to no goal"


def test_bundled_lengths_in_band(bank):
    lengths = bank.lengths()
    assert min(lengths) >= 9
    assert max(lengths) <= 31
    assert abs(statistics.mean(lengths) - 22.7) <= 1.5


def test_goal_ingredient_and_appliance_helpers(bank):
    g = bank.goals["oatmeal_berry"]
    assert "oats" in g.ingredients()
    assert "berries" in g.ingredients()
    assert "water" in g.ingredients()
    assert g.uses_appliance("stove")
    assert not g.uses_appliance("blender")


def test_unknown_preference_lookup_rejected(bank):
    with pytest.raises(BankError):
        bank.goals_for_pref("glittery")


# -- policy bank ---------------------------------------------------------------------

def test_policy_bank_covers_every_goal(bank):
    policies = build_policy_bank(bank, cap=3, seed=0)
    assert set(policies.policies) == set(bank.goal_ids())
    for gid in bank.goal_ids():
        seqs = policies.sequences(gid)
        assert seqs
        total = count_linearizations(bank.goals[gid].network)
        assert len(seqs) == min(3, total)
        for seq in seqs:
            assert seq[-1].startswith("serve(")


def test_policy_bank_replays_in_domain(bank, spec):
    build_policy_bank(bank, domain=spec, cap=2, seed=1)


def test_policy_bank_names_broken_goal(spec):
    # pour before gather can never execute
    bad = TaskNetwork(("pour(oats,pot)", "gather(oats)", "serve(pot)"))
    from souschef.recipes import Goal
    bank = GoalBank(goals={"broken": Goal("broken", "Broken", "stew", "pot", bad)},
                    preferences=("warm",), goal_prefs={"broken": ("warm",)})
    with pytest.raises(BankError, match="broken"):
        build_policy_bank(bank, domain=spec, cap=1, seed=0)


def test_pooled_sequences_sorted_by_goal(bank):
    policies = build_policy_bank(bank, cap=2, seed=0)
    pooled = policies.pooled(["stew_beef", "oatmeal_berry"])
    expect = list(policies.sequences("oatmeal_berry")) + list(
        policies.sequences("stew_beef"))
    assert pooled == expect
    with pytest.raises(BankError):
        policies.sequences("no_such_goal")


# -- next-step machinery ---------------------------------------------------------------

def test_valid_next_steps_respects_all_constraints():
    n = net(["a", "b", "c"], chains=((0, 1),), cliques=((1, 2),))
    assert valid_next_steps(n, set()) == {"a"}
    assert valid_next_steps(n, {"a"}) == {"b", "c"}
    assert valid_next_steps(n, {"a", "c"}) == {"b"}
    assert valid_next_steps(n, {"a", "b", "c"}) == set()


def test_forced_predecessors_close_transitively():
    n = net(["a", "b", "c", "d"], chains=((0, 1), (1, 2)))
    preds = forced_predecessors(n)
    assert preds[2] == {0, 1}
    assert preds[3] == {0, 1, 2}  # declaration order, transitively


# -- experiments ---------------------------------------------------------------------

def test_experiment_count_equals_intersecting_pairs(bank, experiments):
    want = 0
    for pa, pb in itertools.combinations(sorted(bank.preferences), 2):
        if set(bank.goals_for_pref(pa)) & set(bank.goals_for_pref(pb)):
            want += 1
    assert len(experiments) == want == 967


def test_every_truth_lies_in_the_intersection(bank, experiments):
    for exp in experiments:
        inter = set(bank.goals_for_pref(exp.pref_a)) & set(
            bank.goals_for_pref(exp.pref_b))
        assert exp.true_goal in inter


def test_experiments_are_seed_deterministic(bank, experiments):
    again = generate_experiments(bank, seed=0)
    assert again == experiments
    other = generate_experiments(bank, seed=1)
    assert [e.key for e in other] == [e.key for e in experiments]
    assert any(a.true_goal != b.true_goal for a, b in zip(other, experiments))


def test_disjoint_preferences_yield_no_experiments():
    from souschef.recipes import Goal
    n = TaskNetwork(("gather(oats)", "serve(pot)"))
    bank = GoalBank(
        goals={"a": Goal("a", "A", "stew", "pot", n),
               "b": Goal("b", "B", "salad", "bowl", n)},
        preferences=("warm", "chilled"),
        goal_prefs={"a": ("warm",), "b": ("chilled",)})
    assert generate_experiments(bank) == []


def test_experiment_key_format():
    exp = ExperimentSpec("sweet", "warm", "oatmeal_berry", 0)
    assert exp.key == "sweet+warm"


# -- text schema ----------------------------------------------------------------------

GOOD_BANK = """\
goalbank v1
preferences: warm, sweet

goal demo type=stew vessel=pot "Demo stew"
  step gather(oats)
  step pour(oats,pot)
  step serve(pot)
  chain 0 -> 1
  prefs warm, sweet
"""


def test_parse_minimal_bank_roundtrip(tmp_path):
    bank = parse_goal_bank(GOOD_BANK)
    assert bank.goal_ids() == ("demo",)
    assert bank.goals["demo"].network.chains == ((0, 1),)
    path = tmp_path / "bank.txt"
    write_goal_bank(bank, str(path))
    again = parse_goal_bank(path.read_text())
    assert again.goal_ids() == bank.goal_ids()
    assert again.goals["demo"].network == bank.goals["demo"].network
    assert again.goal_prefs == bank.goal_prefs


@pytest.mark.parametrize("mutate,exc", [
    (lambda t: t.replace("goalbank v1", "goalbank v2"), BankParseError),
    (lambda t: t.replace("goal demo", "goal de mo"), BankParseError),
    (lambda t: t + GOOD_BANK.split("\n", 2)[2], BankParseError),  # duplicate id+prefs
    (lambda t: t.replace("  step gather(oats)\n", "") and t.replace(
        "  step ", "  footstep "), BankParseError),
    (lambda t: t.replace("chain 0 -> 1", "chain one -> two"), BankParseError),
    (lambda t: t.replace("prefs warm, sweet", "prefs warm, salty"), BankError),
    (lambda t: t.replace(", sweet\n\ngoal", "\n\ngoal"), BankError),  # sweet unused
    (lambda t: t.replace("  prefs warm, sweet\n", ""), BankParseError),
])
def test_parse_errors(mutate, exc):
    with pytest.raises(exc):
        parse_goal_bank(mutate(GOOD_BANK))


def test_directive_outside_goal_rejected():
    text = "goalbank v1\npreferences: warm\nstep gather(oats)\n"
    with pytest.raises(BankParseError):
        parse_goal_bank(text)
