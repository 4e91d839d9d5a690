#!/usr/bin/env python3
"""Author and validate the bundled goal bank and question templates.

Builds the thirty recipe networks, attaches the preference vocabulary,
checks the bank invariants (length stats, experiment count, every
linearization executable), simulates the first clarifying question of every
generated experiment to estimate how many episodes pin the true goal
immediately, and writes src/souschef/data/goalbank.txt and questions.txt.

Run from the repository root:  python3 tools/build_data.py [--dry-run]
"""

from __future__ import annotations

import argparse
import collections
import itertools
import math
import pprint
import statistics
import sys
from typing import Dict, List, Sequence, Tuple

from souschef import load_bundled_domain
from souschef.belief import GoalBelief, pref_prior
from souschef.inquiry import (CostSchedule, apply_answer, build_question_bank,
                              select_question, should_ask)
from souschef.recipes import (Goal, GoalBank, TaskNetwork, count_linearizations,
                              generate_experiments, linearizations,
                              validate_network, write_goal_bank)
from souschef.world import replay

OUT_BANK = "src/souschef/data/goalbank.txt"
OUT_QUESTIONS = "src/souschef/data/questions.txt"

# Bank invariants the shipped data must satisfy.
EXPECTED_EXPERIMENTS = 967
LENGTH_MIN, LENGTH_MAX = 9, 31
MEAN_LOW, MEAN_HIGH = 21.2, 24.2
MAX_RISKY_EPISODES = 30


# -- step shorthand ---------------------------------------------------------------

def G(x): return f"gather({x})"
def P(x, v): return f"pour({x},{v})"
def M(x): return f"mix({x})"
def C(x): return f"cook({x})"
def RH(x): return f"reduce_heat({x})"
def B(x): return f"blend({x})"
def ON(a): return f"turn_on({a})"
def SRV(v): return f"serve({v})"


CW = "collect_water"


def ing(x, v):
    """Fetch an ingredient and add it to the vessel."""
    return [G(x), P(x, v)]


def ing_mix(x, v):
    """Fetch, add, and stir in."""
    return [G(x), P(x, v), M(x)]


def water(v):
    return [CW, P("water", v)]


def clique(*chains):
    return ("clique", [list(c) for c in chains])


def seq(*keys):
    return ("seq", list(keys))


def pot_base(main):
    """Shared opener for pot dishes: water + main ingredient + stove, any order."""
    return clique(water("pot"), ing(main, "pot"), [ON("stove")])


# -- the thirty recipes -------------------------------------------------------------

def oatmeal(gid, title, toppings):
    blocks = [
        pot_base("oats"),
        seq(C("oats")),
        clique(*[ing(t, "pot") for t in toppings]),
        seq(RH("oats"), M("oats"), SRV("pot")),
    ]
    return (gid, "oatmeal", "pot", title, blocks)


def smoothie(gid, title, ingredients, blended):
    chains = [water("blender_jar") if x == "water" else ing(x, "blender_jar")
              for x in ingredients]
    blend_block = (clique(*[[B(x)] for x in blended]) if len(blended) > 1
                   else seq(B(blended[0])))
    blocks = [
        clique(*chains),
        seq(ON("blender")),
        blend_block,
        seq(SRV("blender_jar")),
    ]
    return (gid, "smoothie", "blender_jar", title, blocks)


def parfait(gid, title, plain, stirred):
    chains = [ing(x, "glass") for x in plain] + [ing_mix(x, "glass") for x in stirred]
    blocks = [clique(*chains), seq(SRV("glass"))]
    return (gid, "parfait", "glass", title, blocks)


def salad(gid, title, veg, dressing, toss=None, stirred_dressing=()):
    blocks = [clique(*[ing(x, "bowl") for x in veg])]
    dress_chains = [ing(x, "bowl") for x in dressing]
    dress_chains += [ing_mix(x, "bowl") for x in stirred_dressing]
    if dress_chains:
        blocks.append(clique(*dress_chains) if len(dress_chains) > 1
                      else ("seq", dress_chains[0]))
    tail = []
    if toss:
        tail.append(M(toss))
    tail.append(SRV("bowl"))
    blocks.append(seq(*tail))
    return (gid, "salad", "bowl", title, blocks)


def pasta(gid, title, sauce, finishing):
    blocks = [
        pot_base("pasta"),
        seq(C("pasta")),
        clique(*[ing(x, "pot") for x in sauce]),
        seq(*finishing, M("pasta"), SRV("pot")),
    ]
    return (gid, "pasta", "pot", title, blocks)


def stew(gid, title, main, veg, cooked_veg):
    blocks = [
        pot_base(main),
        seq(C(main)),
        clique(*[ing(x, "pot") for x in veg]),
        clique(*[[C(x)] for x in cooked_veg]),
        seq(RH(main), M(main), SRV("pot")),
    ]
    return (gid, "stew", "pot", title, blocks)


RECIPES = [
    oatmeal("oatmeal_berry", "Berry banana oatmeal",
            ["milk", "honey", "berries", "banana", "walnuts", "granola"]),
    oatmeal("oatmeal_apple", "Apple cinnamon oatmeal",
            ["milk", "honey", "apple", "cinnamon", "walnuts", "butter", "granola"]),
    oatmeal("oatmeal_chocolate", "Chocolate banana oatmeal",
            ["milk", "cocoa", "banana", "honey", "almonds", "cream", "sugar"]),
    oatmeal("oatmeal_savory", "Savory egg oatmeal",
            ["egg", "cheese", "spinach", "oil", "pepper", "onion", "garlic"]),
    oatmeal("oatmeal_harvest", "Harvest peach oatmeal",
            ["milk", "peach", "honey", "cinnamon", "walnuts", "granola", "butter", "sugar"]),

    smoothie("smoothie_banana", "Banana milk smoothie",
             ["banana", "milk", "honey"], ["banana"]),
    smoothie("smoothie_berry", "Berry yogurt smoothie",
             ["berries", "banana", "yogurt", "milk", "honey", "sugar"],
             ["berries", "banana", "yogurt"]),
    smoothie("smoothie_tropical", "Tropical mango smoothie",
             ["mango", "pineapple", "banana", "coconut_milk", "honey", "yogurt"],
             ["mango", "pineapple", "banana"]),
    smoothie("smoothie_green", "Green garden smoothie",
             ["spinach", "apple", "banana", "cucumber", "water", "honey"],
             ["spinach", "apple", "banana"]),
    smoothie("smoothie_peanut", "Peanut butter cocoa smoothie",
             ["peanut_butter", "banana", "milk", "cocoa", "oats", "honey"],
             ["banana", "peanut_butter", "oats"]),

    parfait("parfait_berry", "Berry granola parfait",
            plain=["granola", "berries", "banana", "honey", "almonds"],
            stirred=["yogurt", "cream"]),
    parfait("parfait_tropical", "Tropical coconut parfait",
            plain=["mango", "pineapple", "granola", "honey", "banana", "sugar"],
            stirred=["yogurt", "coconut_milk"]),
    parfait("parfait_chocolate", "Chocolate almond parfait",
            plain=["granola", "banana", "almonds", "sugar"],
            stirred=["yogurt", "cocoa", "cream"]),
    parfait("parfait_apple", "Apple crunch parfait",
            plain=["apple", "granola", "walnuts", "honey", "butter", "sugar"],
            stirred=["yogurt", "cinnamon"]),
    parfait("parfait_peach", "Peach melba parfait",
            plain=["peach", "berries", "granola", "honey", "almonds", "sugar"],
            stirred=["yogurt", "cream"]),

    salad("salad_garden", "Garden vegetable salad",
          veg=["lettuce", "tomato", "cucumber", "carrot", "onion", "corn"],
          dressing=["oil", "vinegar", "pepper"], toss="lettuce"),
    salad("salad_greek", "Greek feta salad",
          veg=["lettuce", "tomato", "cucumber", "olives", "feta", "onion", "pepper"],
          dressing=["oil", "vinegar"], toss="lettuce"),
    salad("salad_spinach", "Spinach berry salad",
          veg=["spinach", "berries", "walnuts", "feta", "apple", "cucumber"],
          dressing=["oil", "vinegar", "honey"], toss="spinach"),
    salad("salad_bean", "Bean corn salad",
          veg=["beans", "corn", "tomato", "onion", "pepper", "cumin", "celery"],
          dressing=["oil", "vinegar"], toss="beans"),
    salad("salad_fruit", "Fresh fruit salad",
          veg=["berries", "banana", "apple", "mango", "peach", "pineapple"],
          dressing=["honey", "sugar"], stirred_dressing=["yogurt"]),

    pasta("pasta_tomato", "Tomato basil pasta",
          sauce=["tomato", "garlic", "onion", "oil", "basil", "parmesan",
                 "olives", "pepper"],
          finishing=[C("tomato")]),
    pasta("pasta_pesto", "Basil pesto pasta",
          sauce=["basil", "garlic", "oil", "walnuts", "parmesan", "spinach",
                 "pepper", "butter"],
          finishing=[ON("blender"), B("basil")]),
    pasta("pasta_primavera", "Primavera vegetable pasta",
          sauce=["zucchini", "carrot", "peas", "corn", "garlic", "onion", "oil",
                 "parmesan", "pepper"],
          finishing=[C("zucchini")]),
    pasta("pasta_cheese", "Creamy mac and cheese",
          sauce=["cheese", "milk", "butter", "parmesan", "breadcrumbs", "pepper",
                 "onion", "egg"],
          finishing=[C("cheese")]),
    pasta("pasta_peanut", "Peanut noodle pasta",
          sauce=["peanut_butter", "garlic", "carrot", "cucumber", "honey",
                 "vinegar", "pepper", "celery"],
          finishing=[]),

    stew("stew_beef", "Hearty beef stew", "beef",
         veg=["potato", "carrot", "onion", "celery", "garlic", "tomato", "pepper"],
         cooked_veg=["potato", "carrot", "onion"]),
    stew("stew_chicken", "Chicken corn stew", "chicken",
         veg=["corn", "peas", "carrot", "onion", "celery", "garlic", "cream",
              "potato"],
         cooked_veg=["carrot", "corn"]),
    stew("stew_lentil", "Lentil tomato stew", "lentils",
         veg=["carrot", "onion", "garlic", "tomato", "cumin", "spinach", "oil",
              "celery"],
         cooked_veg=["carrot", "tomato"]),
    stew("stew_chili", "Three alarm bean chili", "beans",
         veg=["tomato", "onion", "garlic", "chili_powder", "cumin", "corn",
              "pepper", "oil"],
         cooked_veg=["tomato", "onion", "corn"]),
    stew("stew_vegetable", "Garden vegetable stew", "potato",
         veg=["carrot", "zucchini", "corn", "peas", "celery", "onion", "tomato",
              "garlic", "oil"],
         cooked_veg=["carrot", "zucchini", "corn", "peas"]),
]


# -- preference vocabulary -----------------------------------------------------------

PREFERENCES = [
    "berry-forward", "blended", "breakfast", "cheesy", "chilled", "chocolatey",
    "classic", "colorful", "comforting", "creamy", "crunchy", "dairy-free",
    "dinner", "fiber-rich", "filling", "fresh", "fruity", "garlicky", "grainy",
    "hearty", "herby", "high-protein", "indulgent", "layered", "leafy", "light",
    "low-sugar", "lunch", "meaty", "mild", "no-cook", "nutty", "one-pot",
    "quick", "refreshing", "rich", "savory", "slow-simmered", "smooth", "snack",
    "spicy", "sweet", "tangy", "tomato-rich", "tropical", "vegan", "vegetarian",
    "veggie-packed", "warm", "wholesome",
]

GOAL_PREFS: Dict[str, List[str]] = {
    "oatmeal_apple": ["breakfast", "classic", "comforting", "crunchy", "fiber-rich",
        "grainy", "mild", "nutty"],
    "oatmeal_berry": ["berry-forward", "classic", "comforting", "fiber-rich",
        "fruity", "grainy", "one-pot", "quick", "warm"],
    "oatmeal_chocolate": ["breakfast", "chocolatey", "comforting", "creamy",
        "fiber-rich", "one-pot", "rich", "sweet", "warm"],
    "oatmeal_harvest": ["comforting", "fiber-rich", "filling", "indulgent",
        "one-pot", "rich", "sweet", "wholesome"],
    "oatmeal_savory": ["breakfast", "cheesy", "filling", "garlicky", "grainy",
        "hearty", "high-protein", "leafy", "low-sugar", "one-pot", "savory",
        "spicy", "vegetarian"],
    "parfait_apple": ["chilled", "classic", "grainy", "layered", "quick", "snack",
        "sweet", "wholesome"],
    "parfait_berry": ["berry-forward", "breakfast", "crunchy", "fruity",
        "indulgent", "layered", "no-cook", "snack"],
    "parfait_chocolate": ["chocolatey", "creamy", "indulgent", "layered", "nutty",
        "quick", "smooth", "sweet"],
    "parfait_peach": ["berry-forward", "chilled", "colorful", "creamy", "fruity",
        "layered", "mild", "no-cook", "nutty", "sweet"],
    "parfait_tropical": ["colorful", "creamy", "crunchy", "fruity", "grainy",
        "indulgent", "layered", "refreshing", "rich", "sweet", "tropical"],
    "pasta_cheese": ["cheesy", "comforting", "creamy", "dinner", "filling",
        "high-protein", "indulgent", "lunch", "mild", "one-pot", "rich", "savory",
        "smooth", "vegetarian", "warm"],
    "pasta_peanut": ["crunchy", "dairy-free", "dinner", "hearty", "mild", "nutty",
        "one-pot", "quick", "savory", "spicy", "tangy", "veggie-packed", "warm"],
    "pasta_pesto": ["blended", "cheesy", "comforting", "dinner", "garlicky",
        "herby", "indulgent", "leafy", "lunch", "nutty", "one-pot", "rich",
        "savory", "vegetarian", "warm"],
    "pasta_primavera": ["dinner", "fiber-rich", "filling", "fresh", "garlicky",
        "light", "one-pot", "veggie-packed", "warm"],
    "pasta_tomato": ["cheesy", "classic", "colorful", "filling", "garlicky",
        "herby", "low-sugar", "lunch", "slow-simmered", "tomato-rich"],
    "salad_bean": ["crunchy", "dairy-free", "fiber-rich", "filling", "fresh",
        "hearty", "high-protein", "lunch", "no-cook", "spicy", "tangy", "vegan",
        "veggie-packed", "wholesome"],
    "salad_fruit": ["berry-forward", "chilled", "fruity", "lunch", "no-cook",
        "snack", "sweet", "tangy", "tropical", "vegetarian"],
    "salad_garden": ["chilled", "crunchy", "fresh", "leafy", "light", "low-sugar",
        "mild", "no-cook", "refreshing", "tomato-rich", "vegan"],
    "salad_greek": ["cheesy", "classic", "colorful", "fresh", "herby", "leafy",
        "light", "low-sugar", "lunch", "no-cook", "quick", "refreshing", "tangy",
        "vegetarian", "veggie-packed"],
    "salad_spinach": ["berry-forward", "cheesy", "chilled", "crunchy", "fresh",
        "fruity", "leafy", "light", "no-cook", "nutty", "refreshing", "savory",
        "vegetarian", "wholesome"],
    "smoothie_banana": ["blended", "classic", "creamy", "light", "mild", "quick",
        "smooth", "snack", "tropical"],
    "smoothie_berry": ["berry-forward", "blended", "breakfast", "colorful", "fresh",
        "light", "smooth", "snack"],
    "smoothie_green": ["blended", "breakfast", "chilled", "dairy-free",
        "fiber-rich", "fruity", "leafy", "low-sugar", "quick", "refreshing",
        "smooth", "snack", "vegan", "veggie-packed", "wholesome"],
    "smoothie_peanut": ["blended", "chilled", "chocolatey", "filling", "grainy",
        "high-protein", "indulgent", "no-cook", "nutty", "quick", "rich", "smooth",
        "snack", "sweet"],
    "smoothie_tropical": ["breakfast", "dairy-free", "fresh", "indulgent", "light",
        "refreshing", "sweet", "tropical"],
    "stew_beef": ["classic", "comforting", "dairy-free", "filling", "hearty",
        "high-protein", "indulgent", "meaty", "rich", "savory", "slow-simmered",
        "tomato-rich"],
    "stew_chicken": ["creamy", "dinner", "garlicky", "hearty", "meaty", "mild",
        "one-pot", "slow-simmered", "warm", "wholesome"],
    "stew_chili": ["classic", "colorful", "dinner", "fiber-rich", "hearty",
        "one-pot", "savory", "slow-simmered", "spicy", "tangy", "tomato-rich",
        "vegan", "vegetarian", "veggie-packed"],
    "stew_lentil": ["dairy-free", "fiber-rich", "garlicky", "hearty", "herby",
        "high-protein", "leafy", "slow-simmered", "tomato-rich", "vegan", "warm",
        "wholesome"],
    "stew_vegetable": ["colorful", "comforting", "dairy-free", "dinner",
        "low-sugar", "vegan", "vegetarian", "veggie-packed", "warm", "wholesome"],
}

EITHER_OR_QUESTIONS = [
    ("warm", "chilled", "Should the dish be warm or chilled?"),
    ("sweet", "savory", "Are we going sweet or savory?"),
    ("hearty", "light", "Something hearty or something light?"),
    ("creamy", "crunchy", "More creamy or more crunchy?"),
]


# Semantically defensible goals per preference.  The shipped assignment in
# GOAL_PREFS must stay inside these sets; --tune searches within them for an
# assignment that hits the experiment-count target with well-separated
# preference-pair intersections.
OB, OA, OC, OS, OH = ("oatmeal_berry", "oatmeal_apple", "oatmeal_chocolate",
                      "oatmeal_savory", "oatmeal_harvest")
SB, SBER, STRO, SGR, SPN = ("smoothie_banana", "smoothie_berry",
                            "smoothie_tropical", "smoothie_green",
                            "smoothie_peanut")
PB, PT, PC, PA, PP = ("parfait_berry", "parfait_tropical", "parfait_chocolate",
                      "parfait_apple", "parfait_peach")
GG, GK, GS, GB, GF = ("salad_garden", "salad_greek", "salad_spinach",
                      "salad_bean", "salad_fruit")
QT, QP, QV, QC, QN = ("pasta_tomato", "pasta_pesto", "pasta_primavera",
                      "pasta_cheese", "pasta_peanut")
WB, WC, WL, WCH, WV = ("stew_beef", "stew_chicken", "stew_lentil",
                       "stew_chili", "stew_vegetable")

OATMEALS = [OB, OA, OC, OS, OH]
SMOOTHIES = [SB, SBER, STRO, SGR, SPN]
PARFAITS = [PB, PT, PC, PA, PP]
SALADS = [GG, GK, GS, GB, GF]
PASTAS = [QT, QP, QV, QC, QN]
STEWS = [WB, WC, WL, WCH, WV]

ALLOWED: Dict[str, List[str]] = {
    "warm": OATMEALS + PASTAS + STEWS,
    "chilled": SMOOTHIES + PARFAITS + SALADS,
    "blended": SMOOTHIES + [QP],
    "layered": PARFAITS,
    "one-pot": OATMEALS + PASTAS + STEWS,
    "no-cook": SALADS + PARFAITS + SMOOTHIES,
    "slow-simmered": STEWS + [QT],
    "quick": SMOOTHIES + SALADS + PARFAITS + [QN, OB],
    "breakfast": OATMEALS + SMOOTHIES + PARFAITS,
    "dinner": PASTAS + STEWS,
    "lunch": SALADS + PASTAS,
    "snack": SMOOTHIES + PARFAITS + [GF],
    "sweet": [OB, OA, OC, OH, SB, SBER, STRO, SPN] + PARFAITS + [GF],
    "savory": [OS, GG, GK, GS, GB] + PASTAS + STEWS,
    "spicy": [WCH, GB, QN, OS],
    "tangy": [GK, GS, GB, QN, QT, GF, GG, WCH],
    "mild": [SB, QC, WC, QN, GG, OA, SGR, PA, PP],
    "rich": [OC, SPN, PC, QP, QC, WB, PT, OH, WCH],
    "fresh": SALADS + [SGR, QV, STRO, SBER],
    "creamy": [OC, SB, SPN, PB, PT, PC, PP, QC, WC, PA, SBER],
    "crunchy": [OA, OH, PB, PA, GG, GK, GB, QN, GS, PT],
    "smooth": SMOOTHIES + [QC, PC],
    "grainy": OATMEALS + [SPN, PB, PA, PT, PP],
    "fruity": [OB, OA, OH, SBER, STRO, SGR, PB, PT, PA, PP, GS, GF],
    "tropical": [STRO, PT, GF, SB],
    "berry-forward": [OB, SBER, PB, PP, GS, GF],
    "chocolatey": [OC, SPN, PC],
    "nutty": [OA, OC, OH, SPN, PB, PC, PA, PP, GS, QP, QN],
    "cheesy": [OS, GK, GS, QT, QP, QC],
    "herby": [QT, QP, GK, WL],
    "garlicky": [OS, QT, QP, QV, WB, WC, WL, WCH],
    "tomato-rich": [QT, WL, WCH, WB, GB, GG, GK],
    "leafy": [OS, SGR, GG, GK, GS, QP, WL],
    "veggie-packed": [SGR, GG, GB, QV, WV, WL, GK, WCH, QN],
    "meaty": [WB, WC],
    "vegetarian": [GK, GG, GS, GB, GF, QT, QP, QV, QC, QN, WL, WCH, WV, OS],
    "vegan": [SGR, GG, GB, WL, WCH, WV],
    "dairy-free": [SGR, STRO, GG, GB, QN, WL, WCH, WV, WB],
    "high-protein": [OS, SPN, GB, QC, WB, WC, WL, WCH, QN],
    "low-sugar": [SGR, GG, GK, GB, QV, WL, WV, OS, QT, WCH],
    "fiber-rich": [OB, OA, OH, SPN, GB, WL, WCH, WV, SGR, QV, GG, OC],
    "hearty": [OS, QC, QT, WB, WC, WL, WCH, WV, GB, QN],
    "light": [SGR, GG, GK, GS, GF, QV, SB, STRO, SBER],
    "filling": [OC, OS, OH, SPN, GB, QC, QN, WB, WCH, WV, QV, QT],
    "comforting": [OB, OA, OC, OH, QT, QC, QP, WB, WC, WV, WL, WCH],
    "wholesome": [OB, OA, OH, SGR, PA, GS, GG, WL, WV, WC, SBER, GB],
    "indulgent": [OC, OH, STRO, SPN, PT, PC, PP, QC, QP, WB, PB],
    "classic": [OB, OA, SB, PB, PA, GK, GG, QT, QC, WB, WC, WCH, QP],
    "colorful": [PB, PT, PP, GF, GG, GK, GS, GB, QV, WV, STRO, SBER, QT, WCH],
    "refreshing": [SBER, STRO, SGR, SB, PT, PP, GF, GG, GK, GS],
}

GOAL_DEGREE = (8, 15)


def tune_assignment(seed: int = 42, iters: int = 400000) -> Dict[str, List[str]]:
    """Anneal a goal<->preference assignment inside ALLOWED.

    Hard target: the number of preference pairs sharing at least one goal
    must equal EXPECTED_EXPERIMENTS.  Soft targets: few intersections that
    hold three or more goals with a repeated recipe type (those resist a
    single clarifying question), and small intersections overall.
    """
    import random as _random

    rng = _random.Random(seed)
    rtype = {g: t for g, t, _, _, _ in RECIPES}
    allowed_links = [(g, p) for p, gs in ALLOWED.items() for g in gs]
    current: Dict[str, set] = {gid: set() for gid, *_ in RECIPES}
    for g, ps in GOAL_PREFS.items():
        for p in ps:
            if g in ALLOWED.get(p, ()):  # drop anything outside the envelope
                current[g].add(p)

    members: Dict[Tuple[str, str], set] = collections.defaultdict(set)

    def pair_key(a, b):
        return (a, b) if a < b else (b, a)

    for g, ps in current.items():
        for a, b in itertools.combinations(sorted(ps), 2):
            members[(a, b)].add(g)

    def pair_badness(goals: set) -> Tuple[int, int]:
        if len(goals) < 3:
            return 0, 0
        counts = collections.Counter(rtype[g] for g in goals)
        awk = 1 if max(counts.values()) >= 2 else 0
        return awk, max(0, len(goals) - 5)

    awkward = 0
    oversize = 0
    for goals in members.values():
        a, o = pair_badness(goals)
        awkward += a
        oversize += o
    covered = sum(1 for gs in members.values() if gs)

    def energy(cov, awk, over):
        return 2000 * abs(cov - EXPECTED_EXPERIMENTS) + 30 * awk + 3 * over

    def apply_move(g, p, adding):
        """Toggle link (g, p); returns the energy delta components."""
        nonlocal covered, awkward, oversize
        others = sorted(current[g] - {p})
        for q in others:
            key = pair_key(p, q)
            goals = members[key]
            a0, o0 = pair_badness(goals)
            was = bool(goals)
            if adding:
                goals.add(g)
            else:
                goals.discard(g)
            a1, o1 = pair_badness(goals)
            awkward += a1 - a0
            oversize += o1 - o0
            covered += int(bool(goals)) - int(was)
        if adding:
            current[g].add(p)
        else:
            current[g].discard(p)

    lo, hi = GOAL_DEGREE

    def legal(g, p, adding):
        if adding:
            return len(current[g]) < hi
        return (len(current[g]) > lo
                and sum(1 for gg in current if p in current[gg]) > 2)

    e = energy(covered, awkward, oversize)
    best = e
    best_state = {g: set(ps) for g, ps in current.items()}
    for it in range(iters):
        temp = max(0.05, 4.0 * (1.0 - it / iters))
        g, p = allowed_links[rng.randrange(len(allowed_links))]
        adding = p not in current[g]
        if not legal(g, p, adding):
            continue
        apply_move(g, p, adding)
        e_new = energy(covered, awkward, oversize)
        if e_new <= e or rng.random() < math.exp((e - e_new) / temp):
            e = e_new
            if e < best:
                best = e
                best_state = {gg: set(ps) for gg, ps in current.items()}
        else:
            apply_move(g, p, not adding)  # undo

    # restore best, then greedy descent over all single toggles to a local min
    for g in current:
        for p in list(current[g]):
            if p not in best_state[g]:
                apply_move(g, p, False)
        for p in best_state[g]:
            if p not in current[g]:
                apply_move(g, p, True)
    e = energy(covered, awkward, oversize)
    improved = True
    while improved:
        improved = False
        for g, p in allowed_links:
            adding = p not in current[g]
            if not legal(g, p, adding):
                continue
            apply_move(g, p, adding)
            e_new = energy(covered, awkward, oversize)
            if e_new < e:
                e = e_new
                improved = True
            else:
                apply_move(g, p, not adding)
    print(f"tuned: covered={covered} awkward={awkward} oversize={oversize}")
    return {g: sorted(ps) for g, ps in sorted(current.items())}


# -- assembly -------------------------------------------------------------------------

def build_network(blocks) -> TaskNetwork:
    steps: List[str] = []
    chains: List[Tuple[int, int]] = []
    cliques: List[Tuple[int, ...]] = []
    for kind, content in blocks:
        if kind == "seq":
            steps.extend(content)
            continue
        members: List[int] = []
        for chain in content:
            start = len(steps)
            steps.extend(chain)
            chains.extend((i, i + 1) for i in range(start, len(steps) - 1))
            members.extend(range(start, len(steps)))
        if len(members) >= 2:
            cliques.append(tuple(members))
    return TaskNetwork(steps=tuple(steps), chains=tuple(chains),
                       cliques=tuple(cliques))


def build_bank() -> GoalBank:
    goals = {}
    for gid, rtype, vessel, title, blocks in RECIPES:
        net = build_network(blocks)
        validate_network(net)
        goals[gid] = Goal(goal_id=gid, title=title, recipe_type=rtype,
                          vessel=vessel, network=net)
    return GoalBank(goals=goals, preferences=tuple(sorted(PREFERENCES)),
                    goal_prefs={g: tuple(sorted(ps))
                                for g, ps in GOAL_PREFS.items()})


def question_lines(bank: GoalBank) -> List[str]:
    """Question template file contents, derived from the bank."""
    lines = ['dish_type "Which kind of dish are we making?"',
             'appliance blender "Will we need the blender?"',
             'appliance stove "Will the stove be involved?"']
    counts = collections.Counter()
    for gid in bank.goal_ids():
        counts.update(bank.goals[gid].ingredients())
    n = len(bank.goal_ids())
    for item in sorted(counts):
        if 0 < counts[item] < n:
            lines.append(f'ingredient {item} "Will it have {item.replace("_", " ")}?"')
    for a, b, text in EITHER_OR_QUESTIONS:
        lines.append(f'either_or {a} {b} "{text}"')
    return lines


# -- diagnostics ------------------------------------------------------------------------

def length_report(bank: GoalBank) -> Tuple[int, int, float]:
    lengths = bank.lengths()
    lo, hi, mean = min(lengths), max(lengths), statistics.mean(lengths)
    print(f"lengths: min={lo} max={hi} mean={mean:.3f} "
          f"(band [{MEAN_LOW}, {MEAN_HIGH}])")
    return lo, hi, mean


def audit_first_question(bank: GoalBank, questions) -> Tuple[int, int, List[str]]:
    """Predict which experiments pin the true goal by their first question.

    Mirrors the episode loop under exact binary step fields: the human acts
    once before the robot's first turn, so the belief at question time is the
    preference prior times the field likelihood of that opening action.  With
    binary fields a post-answer lead can only grow (the truth scores 1.0 on
    every action it performs, rivals at most that), so an experiment is safe
    when, after the first answer, no rival matches the truth's posterior, or
    every exact tie sorts lexicographically after the truth.  Risky counts
    the rest.
    """
    from souschef.belief import LIKELIHOOD_EPSILON
    from souschef.seeding import stable_seed

    schedule = CostSchedule()
    experiments = generate_experiments(bank, seed=0)
    risky = 0
    singles = 0
    asked = 0
    notes: List[str] = []

    def verdict(belief: GoalBelief, truth: str) -> Tuple[bool, List[str]]:
        lead = belief.prob(truth)
        ahead = [g for g in belief.probs
                 if g != truth and belief.prob(g) > lead * (1 + 1e-9)]
        tied = [g for g in belief.probs
                if g != truth and math.isclose(belief.prob(g), lead, rel_tol=1e-9)]
        ok = not ahead and all(truth < g for g in tied)
        return ok, sorted(ahead + tied)

    for exp in experiments:
        inter = sorted(set(bank.goals_for_pref(exp.pref_a))
                       & set(bank.goals_for_pref(exp.pref_b)))
        if len(inter) == 1:
            singles += 1
            continue
        truth = bank.goals[exp.true_goal]
        script = linearizations(
            truth.network, cap=1,
            seed=stable_seed(f"human-script:{exp.seed}:{exp.true_goal}"))[0]
        belief = pref_prior(bank, [exp.pref_a, exp.pref_b])
        h1 = script[0]
        belief = belief.reweighted(
            {g: (1.0 if h1 in bank.goals[g].network.steps else 0.0)
             + LIKELIHOOD_EPSILON for g in belief.probs})
        if not should_ask(belief, schedule, None):
            ok, rivals = verdict(belief, exp.true_goal)
            if not ok:
                risky += 1
                notes.append(f"{exp.key} truth={exp.true_goal} no-ask rivals={rivals}")
            continue
        sel = select_question(belief, questions)
        if sel is None:
            ok, rivals = verdict(belief, exp.true_goal)
            if not ok:
                risky += 1
                notes.append(f"{exp.key} truth={exp.true_goal} no-question rivals={rivals}")
            continue
        asked += 1
        question, _ = sel
        row = question.rows[exp.true_goal]
        best = max(row)
        answer = min(a for a, p in zip(question.answers, row) if p >= best - 1e-12)
        post = apply_answer(belief, question, answer)
        ok, rivals = verdict(post, exp.true_goal)
        if not ok:
            risky += 1
            notes.append(f"{exp.key} truth={exp.true_goal} q={question.question_id}"
                         f" answer={answer!r} rivals={rivals}")
    print(f"experiments: {len(experiments)} (target {EXPECTED_EXPERIMENTS})")
    print(f"singleton intersections: {singles}; first questions asked: {asked}")
    print(f"risky experiments: {risky} (budget {MAX_RISKY_EPISODES})")
    return risky, len(experiments), notes


def intersection_histogram(bank: GoalBank) -> None:
    hist = collections.Counter()
    mixed = 0
    experiments = generate_experiments(bank, seed=0)
    for exp in experiments:
        inter = set(bank.goals_for_pref(exp.pref_a)) & set(bank.goals_for_pref(exp.pref_b))
        hist[len(inter)] += 1
        types = collections.Counter(bank.goals[g].recipe_type for g in inter)
        if len(inter) >= 3 and max(types.values()) >= 2:
            mixed += 1
    print("intersection sizes:", dict(sorted(hist.items())))
    print(f"structurally awkward (>=3 goals with a repeated type): {mixed}")


def validate_executability(bank: GoalBank) -> None:
    spec = load_bundled_domain()
    for gid in bank.goal_ids():
        net = bank.goals[gid].network
        count = count_linearizations(net)
        for seq_keys in linearizations(net, cap=25, seed=11):
            final = replay(seq_keys, spec)
            if not final.is_terminal():
                raise SystemExit(f"{gid}: linearization does not finish the dish")
        if count < 1:
            raise SystemExit(f"{gid}: no linearizations")


def main(argv: Sequence[str] = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dry-run", action="store_true",
                        help="report stats without writing files")
    parser.add_argument("--tune", action="store_true",
                        help="search for a preference assignment and print it")
    args = parser.parse_args(argv)

    if args.tune:
        assignment = tune_assignment()
        print("GOAL_PREFS = ", end="")
        pprint.pprint(assignment, width=78)
        return 0

    bank = build_bank()
    lo, hi, mean = length_report(bank)
    validate_executability(bank)
    print("counts per goal:",
          {gid: count_linearizations(bank.goals[gid].network)
           for gid in bank.goal_ids()})

    questions = build_question_bank(
        bank, [_parse_line(line) for line in question_lines(bank)])
    print(f"questions: {len(questions)}")
    intersection_histogram(bank)
    risky, n_experiments, notes = audit_first_question(bank, questions)
    for note in notes[:40]:
        print("  !", note)

    problems = []
    if lo != LENGTH_MIN or hi != LENGTH_MAX:
        problems.append(f"length range [{lo}, {hi}] != [{LENGTH_MIN}, {LENGTH_MAX}]")
    if not (MEAN_LOW <= mean <= MEAN_HIGH):
        problems.append(f"mean length {mean:.3f} out of band")
    if n_experiments != EXPECTED_EXPERIMENTS:
        problems.append(f"{n_experiments} experiments != {EXPECTED_EXPERIMENTS}")
    if risky > MAX_RISKY_EPISODES:
        problems.append(f"{risky} risky first questions > {MAX_RISKY_EPISODES}")

    if not args.dry_run:
        write_goal_bank(bank, OUT_BANK)
        with open(OUT_QUESTIONS, "w", encoding="utf-8") as fh:
            fh.write("# Question templates for the bundled goal bank.\n")
            fh.write("# Grammar: docs/formats.md\n")
            for line in question_lines(bank):
                fh.write(line + "\n")
        print(f"wrote {OUT_BANK} and {OUT_QUESTIONS}")

    if problems:
        print("PROBLEMS:")
        for p in problems:
            print("  -", p)
        return 1
    print("all bank invariants hold")
    return 0


def _parse_line(line: str) -> Tuple[str, ...]:
    head, _, rest = line.partition('"')
    return (*head.split(), rest[:-1])


if __name__ == "__main__":
    sys.exit(main())
