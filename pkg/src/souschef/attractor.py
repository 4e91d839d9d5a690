"""Attractor fields and relevance judges.

A source element (a goal, a stated preference, or a question answer) exerts a
nonnegative pull on each member of a target set (action templates, candidate
answers).  Closed-case fields come from policy frequencies; open-case fields
come from a pluggable judge.  The aggregate score of an action sums the pulls
of every live goal (weighted by its belief probability) and every utterance.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple

import requests
from filelock import FileLock

from .recipes import GoalBank, PolicyBank
from .world import ActionInstance


class AttractorError(Exception):
    pass


class JudgeError(AttractorError):
    pass


class JudgeUnavailableError(JudgeError):
    """Transport-level failure talking to a judge endpoint."""


class MalformedJudgeOutputError(JudgeError):
    """The judge replied, but not in the agreed shape."""


@dataclass(frozen=True)
class AttractorField:
    """Pull amplitudes of one source over a target set.  Absent targets pull 0."""

    source: str
    scores: Mapping[str, float]

    def __post_init__(self):
        for t, v in self.scores.items():
            if not (v >= 0.0) or v != v:
                raise AttractorError(f"negative/NaN amplitude for {t!r}: {v}")

    def score(self, target: str) -> float:
        return self.scores.get(target, 0.0)


@dataclass(frozen=True)
class ScoreWeights:
    """Per-term weights of the aggregate score (defaults per design: 1.0)."""

    w_goal: float = 1.0
    w_pref: float = 1.0


def field_from_policy_bank(source: str, bank: GoalBank,
                           policies: PolicyBank) -> AttractorField:
    """Exact field for a goal id or a preference string.

    A goal's field scores each action template by the fraction of the goal's
    linearizations containing it (0 or 1, since every linearization of one
    network uses the same step set).  A preference pools the linearizations
    of every goal mapped to it, so fractions are generally strict.
    """
    if source in bank.goals:
        seqs = policies.sequences(source)
    elif source in bank.preferences:
        goal_ids = bank.goals_for_pref(source)
        if not goal_ids:
            raise AttractorError(f"preference {source!r} maps to no goal")
        seqs = policies.pooled(goal_ids)
    else:
        raise AttractorError(f"unknown field source: {source!r}")
    return pooled_frequency_field(source, seqs)


def pooled_frequency_field(source: str,
                           sequences: Sequence[Tuple[str, ...]]) -> AttractorField:
    """Fraction of the given sequences containing each action template."""
    if not sequences:
        raise AttractorError(f"no sequences to pool for {source!r}")
    counts: Dict[str, int] = {}
    for seq in sequences:
        for key in set(seq):
            counts[key] = counts.get(key, 0) + 1
    n = len(sequences)
    scores = {k: counts[k] / n for k in sorted(counts)}
    return AttractorField(source=source, scores=scores)


def field_from_judge(source: str, targets: Sequence[str], context: str,
                     judge: "Judge") -> AttractorField:
    """Judge-scored field over an explicit target set, clamped to [0, 1]."""
    if not targets:
        raise AttractorError(f"no targets to score for {source!r}")
    raw = judge.score(source, list(targets), context)
    scores = {}
    for t in targets:
        v = raw.get(t)
        if v is None or not isinstance(v, (int, float)) or v != v:
            raise MalformedJudgeOutputError(f"judge gave no usable score for {t!r}")
        scores[t] = min(1.0, max(0.0, float(v)))
    return AttractorField(source=source, scores=scores)


def aggregate_score(action: ActionInstance,
                    goal_fields: Mapping[str, AttractorField],
                    belief_probs: Mapping[str, float],
                    pref_fields: Mapping[str, AttractorField],
                    weights: ScoreWeights = ScoreWeights()) -> float:
    """Summed pull on one action: goal terms (belief-weighted) plus utterances.

    Every goal in the belief support and every utterance must have a field;
    a missing field is a hard error rather than a silent zero.
    """
    key = action.template_key()
    total = 0.0
    for gid in sorted(belief_probs):
        p = belief_probs[gid]
        if p <= 0.0:
            continue
        f = goal_fields.get(gid)
        if f is None:
            raise AttractorError(f"no field for supported goal {gid!r}")
        total += weights.w_goal * p * f.score(key)
    for src in sorted(pref_fields):
        total += weights.w_pref * pref_fields[src].score(key)
    return total


def goal_mass(action: ActionInstance, goal_fields: Mapping[str, AttractorField],
              belief_probs: Mapping[str, float]) -> float:
    """Belief-weighted goal-field value of one action (the act-gate signal)."""
    key = action.template_key()
    return sum(p * goal_fields[g].score(key)
               for g, p in belief_probs.items() if p > 0.0 and g in goal_fields)


# -- judges -------------------------------------------------------------------

class Judge(Protocol):
    """Relevance scorer: how strongly does each target relate to the source?"""

    def score(self, source: str, targets: List[str], context: str) -> Dict[str, float]:
        ...

    def propose(self, context: str, max_results: int) -> List[str]:
        """Candidate goal names for an interaction summary (open case)."""
        ...


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> List[str]:
    return _TOKEN_RE.findall(text.lower().replace("_", " "))


# Hand-authored associations from preference words to kitchen vocabulary.
# Deliberately imperfect: the mock stands in for a language model, not an oracle.
_MOCK_LEXICON: Dict[str, Tuple[str, ...]] = {
    "warm": ("stove", "cook", "pot", "simmering", "reduce", "heat", "oats", "stew", "pasta"),
    "chilled": ("glass", "cup", "blender", "salad", "smoothie", "parfait", "yogurt"),
    "sweet": ("honey", "sugar", "berries", "banana", "mango", "peach", "cocoa", "apple"),
    "savory": ("garlic", "onion", "beef", "chicken", "cheese", "oil", "pepper", "cumin"),
    "breakfast": ("oats", "granola", "yogurt", "milk", "oatmeal", "parfait", "smoothie"),
    "dinner": ("pasta", "stew", "beef", "chicken", "pot", "stove"),
    "creamy": ("cream", "milk", "yogurt", "butter", "coconut", "cheese", "peanut"),
    "crunchy": ("walnuts", "almonds", "granola", "cucumber", "celery", "lettuce", "breadcrumbs"),
    "fruity": ("berries", "banana", "apple", "mango", "pineapple", "peach"),
    "tropical": ("mango", "pineapple", "coconut", "banana"),
    "nutty": ("walnuts", "almonds", "peanut", "butter"),
    "cheesy": ("cheese", "parmesan", "feta"),
    "herby": ("basil", "spinach"),
    "garlicky": ("garlic", "onion"),
    "spicy": ("chili", "powder", "pepper", "cumin"),
    "tangy": ("vinegar", "feta", "yogurt", "olives"),
    "hearty": ("stew", "beef", "potato", "beans", "lentils", "pot"),
    "light": ("salad", "smoothie", "lettuce", "cucumber", "glass"),
    "blended": ("blender", "blend", "smoothie"),
    "leafy": ("spinach", "lettuce", "salad"),
    "meaty": ("beef", "chicken"),
    "smooth": ("blender", "blend", "yogurt", "cream", "banana"),
}


class MockJudge:
    """Deterministic stand-in judge: normalized token overlap plus a lexicon.

    The optional vocabulary maps dish names to keyword sets; it powers
    ``propose`` and enriches goal-name scoring.  Build one from a goal bank
    with :meth:`from_goal_bank` so open-case proposals can surface real dishes.
    """

    def __init__(self, vocabulary: Optional[Mapping[str, Iterable[str]]] = None,
                 lexicon: Optional[Mapping[str, Iterable[str]]] = None):
        self.vocabulary: Dict[str, Tuple[str, ...]] = {
            name: tuple(kw) for name, kw in (vocabulary or {}).items()}
        self.lexicon: Dict[str, Tuple[str, ...]] = {
            k: tuple(v) for k, v in (lexicon or _MOCK_LEXICON).items()}

    @classmethod
    def from_goal_bank(cls, bank: GoalBank) -> "MockJudge":
        vocab = {}
        for gid in bank.goal_ids():
            g = bank.goals[gid]
            kw = set(_tokens(g.title)) | set(_tokens(gid)) | {g.recipe_type.lower()}
            for item in g.ingredients():
                kw.update(_tokens(item))
            kw.add(g.vessel)
            if g.uses_appliance("blender"):
                kw.add("blender")
            if g.uses_appliance("stove"):
                kw.add("stove")
            vocab[gid] = tuple(sorted(kw))
        return cls(vocabulary=vocab)

    def _expand(self, text: str) -> List[str]:
        toks = list(_tokens(text))
        # dish names like "oatmeal_berry" tokenize apart, so try whole-string
        # vocabulary lookup before the per-token pass
        if text.strip() in self.vocabulary:
            toks.extend(_tokens(" ".join(self.vocabulary[text.strip()])))
        for t in list(toks):
            toks.extend(self.lexicon.get(t, ()))
            if t in self.vocabulary:
                toks.extend(_tokens(" ".join(self.vocabulary[t])))
        return toks

    def score(self, source: str, targets: List[str], context: str) -> Dict[str, float]:
        src = set(self._expand(source)) | set(self._expand(context))
        out = {}
        for t in targets:
            tt = set(self._expand(t))
            if not tt:
                out[t] = 0.0
                continue
            out[t] = round(len(src & tt) / len(tt), 6)
        return out

    def propose(self, context: str, max_results: int) -> List[str]:
        scored = self.score(context, sorted(self.vocabulary), context)
        ranked = sorted(scored.items(), key=lambda kv: (-kv[1], kv[0]))
        return [name for name, s in ranked[:max_results] if s > 0.0]


class HttpJudge:
    """Judge client for the JSON-over-HTTP transport.

    ``score`` posts ``{source, targets[], context}`` to the configured
    endpoint and expects ``{"scores": {target: number}}`` back; ``propose``
    posts ``{context, max_results}`` to ``<endpoint>/propose`` and expects
    ``{"goals": [...]}``.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def _post(self, url: str, body: dict) -> dict:
        try:
            resp = requests.post(url, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise JudgeUnavailableError(f"judge unreachable at {url}: {exc}")
        if resp.status_code != 200:
            raise JudgeUnavailableError(f"judge returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError:
            raise MalformedJudgeOutputError("judge response is not JSON")

    def score(self, source: str, targets: List[str], context: str) -> Dict[str, float]:
        data = self._post(self.endpoint,
                          {"source": source, "targets": list(targets), "context": context})
        scores = data.get("scores")
        if not isinstance(scores, dict):
            raise MalformedJudgeOutputError("missing 'scores' object")
        out = {}
        for t in targets:
            v = scores.get(t)
            if not isinstance(v, (int, float)):
                raise MalformedJudgeOutputError(f"no numeric score for {t!r}")
            out[t] = float(v)
        return out

    def propose(self, context: str, max_results: int) -> List[str]:
        data = self._post(self.endpoint + "/propose",
                          {"context": context, "max_results": max_results})
        goals = data.get("goals")
        if not isinstance(goals, list) or not all(isinstance(g, str) for g in goals):
            raise MalformedJudgeOutputError("missing 'goals' list")
        return goals[:max_results]


class CachingJudge:
    """Wrap a judge with a content-addressed cache (optionally persisted).

    Guarantees one underlying call per (source, target-set, context) triple
    and per (context, max_results) proposal.  Thread-safe; the on-disk store
    is guarded by a file lock so parallel workers can share it.
    """

    def __init__(self, judge: Judge, cache_path: Optional[str] = None):
        self.judge = judge
        self.cache_path = cache_path
        self._mem: Dict[str, dict] = {}
        self._lock = threading.Lock()
        if cache_path and os.path.exists(cache_path):
            with open(cache_path, "r", encoding="utf-8") as fh:
                self._mem = json.load(fh)

    @staticmethod
    def _key(kind: str, *parts: object) -> str:
        blob = json.dumps([kind, *parts], sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def _persist(self) -> None:
        if not self.cache_path:
            return
        lock = FileLock(self.cache_path + ".lock")
        with lock:
            merged = dict(self._mem)
            if os.path.exists(self.cache_path):
                with open(self.cache_path, "r", encoding="utf-8") as fh:
                    on_disk = json.load(fh)
                merged = {**on_disk, **merged}
            tmp = self.cache_path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(merged, fh, sort_keys=True)
            os.replace(tmp, self.cache_path)
            self._mem = merged

    def score(self, source: str, targets: List[str], context: str) -> Dict[str, float]:
        key = self._key("score", source, sorted(targets), context)
        with self._lock:
            if key in self._mem:
                cached = self._mem[key]
                return {t: cached[t] for t in targets}
        result = self.judge.score(source, list(targets), context)
        with self._lock:
            self._mem[key] = dict(result)
            self._persist()
        return result

    def propose(self, context: str, max_results: int) -> List[str]:
        key = self._key("propose", context, max_results)
        with self._lock:
            if key in self._mem:
                return list(self._mem[key]["goals"])
        result = self.judge.propose(context, max_results)
        with self._lock:
            self._mem[key] = {"goals": list(result)}
            self._persist()
        return result
