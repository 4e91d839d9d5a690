"""Belief over goals: priors from stated preferences, action-likelihood
updates, a smoothed bigram sequence classifier, and open-case goal proposal.

Probabilities live in plain dicts keyed by goal id.  All public operations
return renormalized distributions and never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .attractor import AttractorField, Judge
from .recipes import GoalBank
from .world import ActionInstance, WAIT_VERB


class BeliefError(Exception):
    pass


LIKELIHOOD_EPSILON = 0.01   # keeps zero-pull goals alive after an update
SUPPORT_EPSILON = 1e-6      # probability mass below this does not count as support
PREF_MISS_FACTOR = 0.02    # per stated preference a goal fails to carry


@dataclass(frozen=True)
class GoalBelief:
    """Normalized distribution over goal ids (iteration order sorted by id)."""

    probs: Mapping[str, float]

    def __post_init__(self):
        if not self.probs:
            raise BeliefError("empty belief")
        total = 0.0
        for g, p in self.probs.items():
            if p < 0.0 or p != p:
                raise BeliefError(f"bad probability for {g!r}: {p}")
            total += p
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise BeliefError(f"belief sums to {total}, not 1")

    @classmethod
    def uniform(cls, goal_ids: Iterable[str]) -> "GoalBelief":
        ids = sorted(goal_ids)
        if not ids:
            raise BeliefError("no goals")
        return cls({g: 1.0 / len(ids) for g in ids})

    @classmethod
    def from_weights(cls, weights: Mapping[str, float]) -> "GoalBelief":
        ids = sorted(weights)
        total = sum(weights[g] for g in ids)
        if total <= 0.0:
            raise BeliefError("all goal weights are zero")
        return cls({g: weights[g] / total for g in ids})

    def prob(self, goal_id: str) -> float:
        return self.probs.get(goal_id, 0.0)

    def argmax(self) -> str:
        """Most probable goal; ties broken by lexicographically smallest id."""
        best = None
        best_p = -1.0
        for g in sorted(self.probs):
            p = self.probs[g]
            if p > best_p + 1e-15:
                best, best_p = g, p
        return best

    def support(self, eps: float = SUPPORT_EPSILON) -> List[str]:
        return [g for g in sorted(self.probs) if self.probs[g] > eps]

    def entropy(self) -> float:
        """Shannon entropy in bits."""
        h = 0.0
        for p in self.probs.values():
            if p > 0.0:
                h -= p * math.log2(p)
        return max(0.0, h)

    def reweighted(self, likelihood: Mapping[str, float]) -> "GoalBelief":
        """Multiply by a per-goal likelihood and renormalize."""
        weights = {}
        for g in sorted(self.probs):
            lk = likelihood.get(g, 0.0)
            if lk < 0.0:
                raise BeliefError(f"negative likelihood for {g!r}")
            weights[g] = self.probs[g] * lk
        return GoalBelief.from_weights(weights)


def pref_prior(bank: GoalBank, stated_prefs: Sequence[str],
               miss_factor: float = PREF_MISS_FACTOR) -> GoalBelief:
    """Prior from stated preferences: weight miss_factor ** (#prefs missing).

    With the default factor a goal matching both stated preferences outweighs
    a one-miss goal 50:1, without ever zeroing anything out.
    """
    for p in stated_prefs:
        if p not in bank.preferences:
            raise BeliefError(f"unknown preference {p!r}")
    weights = {}
    for gid in bank.goal_ids():
        missing = sum(1 for p in stated_prefs if p not in bank.goal_prefs[gid])
        weights[gid] = miss_factor ** missing
    return GoalBelief.from_weights(weights)


def update_from_action(belief: GoalBelief, action: ActionInstance,
                       goal_fields: Mapping[str, AttractorField],
                       epsilon: float = LIKELIHOOD_EPSILON) -> GoalBelief:
    """Bayesian step: posterior proportional to prior * (field pull + epsilon)."""
    if action.verb == WAIT_VERB:
        return belief
    key = action.template_key()
    likelihood = {}
    for g in belief.probs:
        f = goal_fields.get(g)
        if f is None:
            raise BeliefError(f"no attractor field for goal {g!r}")
        likelihood[g] = f.score(key) + epsilon
    return belief.reweighted(likelihood)


# -- sequence classifier -------------------------------------------------------

START = "<s>"


class SequenceClassifier:
    """Generative bigram model per goal with add-one smoothing.

    Fit on linearization corpora, it scores a partial step sequence under
    each goal; posteriors come from normalizing those likelihoods against a
    prior.  Smoothing guarantees every sequence has positive probability, so
    out-of-script observations dampen rather than annihilate a goal.
    """

    def __init__(self):
        self.vocab: Tuple[str, ...] = ()
        self._v = 0
        self._bigram: Dict[str, Dict[Tuple[str, str], int]] = {}
        self._context: Dict[str, Dict[str, int]] = {}
        self.goal_ids: Tuple[str, ...] = ()

    def fit(self, sequences_by_goal: Mapping[str, Sequence[Tuple[str, ...]]]) -> "SequenceClassifier":
        vocab = set()
        for seqs in sequences_by_goal.values():
            for seq in seqs:
                vocab.update(seq)
        self.vocab = tuple(sorted(vocab))
        self._v = len(self.vocab)
        self.goal_ids = tuple(sorted(sequences_by_goal))
        self._bigram = {g: {} for g in self.goal_ids}
        self._context = {g: {} for g in self.goal_ids}
        for g in self.goal_ids:
            big = self._bigram[g]
            ctx = self._context[g]
            for seq in sequences_by_goal[g]:
                prev = START
                for cur in seq:
                    big[(prev, cur)] = big.get((prev, cur), 0) + 1
                    ctx[prev] = ctx.get(prev, 0) + 1
                    prev = cur
        return self

    def step_log_likelihood(self, goal_id: str, prev: str, cur: str) -> float:
        """log p(cur | prev, goal) with add-one smoothing over the vocabulary."""
        if goal_id not in self._bigram:
            raise BeliefError(f"classifier not fit for goal {goal_id!r}")
        c2 = self._bigram[goal_id].get((prev, cur), 0)
        c1 = self._context[goal_id].get(prev, 0)
        return math.log((c2 + 1) / (c1 + self._v))

    def log_likelihood(self, goal_id: str, prefix: Sequence[str]) -> float:
        total = 0.0
        prev = START
        for cur in prefix:
            total += self.step_log_likelihood(goal_id, prev, cur)
            prev = cur
        return total

    def posterior(self, prefix: Sequence[str],
                  prior: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
        """p(goal | prefix) over the fitted goals, via log-sum-exp."""
        if not self.goal_ids:
            raise BeliefError("classifier is not fitted")
        logs = {}
        for g in self.goal_ids:
            lp = self.log_likelihood(g, prefix)
            pr = 1.0 if prior is None else prior.get(g, 0.0)
            if pr <= 0.0:
                continue
            logs[g] = lp + math.log(pr)
        if not logs:
            raise BeliefError("prior excludes every fitted goal")
        peak = max(logs.values())
        weights = {g: math.exp(lp - peak) for g, lp in logs.items()}
        z = sum(weights.values())
        out = {g: 0.0 for g in self.goal_ids}
        for g, w in weights.items():
            out[g] = w / z
        return out

    def predict(self, prefix: Sequence[str]) -> str:
        post = self.posterior(prefix)
        best, best_p = None, -1.0
        for g in sorted(post):
            if post[g] > best_p + 1e-15:
                best, best_p = g, post[g]
        return best

    def accuracy(self, test_by_goal: Mapping[str, Sequence[Tuple[str, ...]]]) -> float:
        """Top-1 accuracy on full held-out sequences."""
        hits = total = 0
        for g in sorted(test_by_goal):
            for seq in test_by_goal[g]:
                total += 1
                if self.predict(seq) == g:
                    hits += 1
        if total == 0:
            raise BeliefError("empty test set")
        return hits / total


# -- interaction summaries and open-case proposal -------------------------------

def summarize_interaction(actions: Sequence[ActionInstance],
                          stated_prefs: Sequence[str] = (),
                          answers: Sequence[str] = ()) -> str:
    """One-line narrative of the collaboration so far, for judge context."""
    substantive = [a for a in actions if a.verb != WAIT_VERB]
    verbs = {a.verb for a in substantive}
    if "serve" in verbs:
        phase = "serving"
    elif verbs & {"cook", "reduce_heat", "blend"}:
        phase = "cooking"
    elif verbs & {"pour", "mix"}:
        phase = "assembling"
    elif verbs & {"gather", "collect_water"}:
        phase = "gathering ingredients"
    else:
        phase = "just starting"
    touched = {a.item for a in substantive
               if a.verb in ("gather", "pour") and a.item is not None}
    if any(a.verb == "collect_water" for a in substantive):
        touched.add("water")  # collect_water carries no argument
    items = sorted(touched)
    appliances = sorted({a.item for a in substantive if a.verb == "turn_on"})
    parts = [f"Phase: {phase}."]
    if items:
        parts.append("Out on the counter: " + ", ".join(items) + ".")
    if appliances:
        parts.append("Switched on: " + ", ".join(appliances) + ".")
    if stated_prefs:
        parts.append("The person asked for something " + " and ".join(stated_prefs) + ".")
    for ans in answers:
        parts.append(f"They said: {ans}.")
    return " ".join(parts)


@dataclass
class GoalProposer:
    """Maintains an open-ended candidate goal set suggested by a judge.

    Each refresh blends the surviving old distribution with fresh uniform
    mass over newly proposed names.  A candidate the judge stops mentioning
    is dropped once it has gone unmentioned twice in a row while its
    probability sits below the drop threshold.
    """

    judge: Judge
    max_results: int = 6
    drop_threshold: float = 0.02
    drop_misses: int = 2
    new_mass: float = 0.5
    probs: Dict[str, float] = field(default_factory=dict)
    _misses: Dict[str, int] = field(default_factory=dict)

    def refresh(self, summary: str) -> Dict[str, float]:
        proposed = self.judge.propose(summary, self.max_results)
        seen = set(proposed)
        for name in list(self.probs):
            if name in seen:
                self._misses[name] = 0
            else:
                self._misses[name] = self._misses.get(name, 0) + 1
                if (self._misses[name] >= self.drop_misses
                        and self.probs[name] < self.drop_threshold):
                    del self.probs[name]
                    del self._misses[name]
        new_names = sorted(seen - set(self.probs))
        if not self.probs and not new_names:
            return {}
        if new_names:
            old_total = sum(self.probs.values())
            keep = (1.0 - self.new_mass) if old_total > 0 else 0.0
            scale = keep / old_total if old_total > 0 else 0.0
            for name in self.probs:
                self.probs[name] *= scale
            share = (1.0 - keep) / len(new_names)
            for name in new_names:
                self.probs[name] = share
                self._misses[name] = 0
        z = sum(self.probs.values())
        self.probs = {g: p / z for g, p in sorted(self.probs.items())}
        return dict(self.probs)

    def belief(self) -> Optional[GoalBelief]:
        if not self.probs:
            return None
        return GoalBelief.from_weights(self.probs)
