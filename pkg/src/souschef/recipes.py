"""Recipe bank: partially ordered task networks, policies, preferences.

A recipe is a task network over action templates: ``chains`` are ordered
edges, ``cliques`` are groups whose members may permute.  Steps that do not
share a clique keep their declaration order, so the valid linearizations of a
network are exactly the linear extensions of (chains + declaration order for
non-clique pairs).  The policy bank materializes those linearizations, capped
and seeded; preferences map onto goal subsets and induce the experiment grid.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .world import DomainError, DomainSpec, parse_template_key, replay


class BankError(Exception):
    """Base class for goal-bank problems."""


class BankParseError(BankError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NetworkContradictionError(BankError):
    """Chains demand an order the clique structure cannot provide."""


@dataclass(frozen=True)
class TaskNetwork:
    """Steps in declaration order plus ordering constraints."""

    steps: Tuple[str, ...]
    chains: Tuple[Tuple[int, int], ...] = ()
    cliques: Tuple[Tuple[int, ...], ...] = ()

    def clique_of(self, idx: int) -> Optional[int]:
        for ci, members in enumerate(self.cliques):
            if idx in members:
                return ci
        return None


@dataclass(frozen=True)
class Goal:
    """One recipe: identity, classification, and its task network."""

    goal_id: str
    title: str
    recipe_type: str
    vessel: str
    network: TaskNetwork

    @property
    def length(self) -> int:
        return len(self.network.steps)

    def ingredients(self) -> Tuple[str, ...]:
        """Items the recipe touches (gathered or collected)."""
        out = set()
        for key in self.network.steps:
            act = parse_template_key(key)
            if act.verb == "gather" and act.item:
                out.add(act.item)
            elif act.verb == "collect_water":
                out.add("water")
        return tuple(sorted(out))

    def uses_appliance(self, appliance: str) -> bool:
        return f"turn_on({appliance})" in self.network.steps


@dataclass
class GoalBank:
    """All recipes plus the preference vocabulary and goal<->pref mapping."""

    goals: Dict[str, Goal]
    preferences: Tuple[str, ...]
    goal_prefs: Dict[str, Tuple[str, ...]]

    def goal_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.goals))

    def recipe_types(self) -> Tuple[str, ...]:
        return tuple(sorted({g.recipe_type for g in self.goals.values()}))

    def goals_for_pref(self, pref: str) -> Tuple[str, ...]:
        if pref not in self.preferences:
            raise BankError(f"unknown preference: {pref!r}")
        return tuple(sorted(g for g, ps in self.goal_prefs.items() if pref in ps))

    def lengths(self) -> List[int]:
        return [self.goals[g].length for g in self.goal_ids()]


# -- linearization machinery -------------------------------------------------

def validate_network(net: TaskNetwork) -> None:
    """Reject ill-formed networks: bad indices, overlapping cliques,
    self-chains, chains that contradict the pinned declaration order, or
    cyclic chains inside a clique run."""
    n = len(net.steps)
    seen: Set[int] = set()
    for members in net.cliques:
        for m in members:
            if not 0 <= m < n:
                raise BankError(f"clique index {m} out of range")
            if m in seen:
                raise BankError(f"step {m} appears in two cliques")
            seen.add(m)
        if len(members) < 2:
            raise BankError("cliques need at least two members")
    run_of = _run_index(net)
    for a, b in net.chains:
        if not (0 <= a < n and 0 <= b < n):
            raise BankError(f"chain ({a},{b}) out of range")
        if a == b:
            raise NetworkContradictionError(f"self-chain on step {a}")
        if run_of[a] != run_of[b] and a > b:
            raise NetworkContradictionError(
                f"chain {a}->{b} contradicts pinned order")
    for run in _runs(net):
        _toposort(run, [(a, b) for a, b in net.chains
                        if a in run and b in run])


def _run_index(net: TaskNetwork) -> List[int]:
    """Map each step to its maximal contiguous same-clique run."""
    run_of = []
    current = 0
    prev_clique: object = object()
    for idx in range(len(net.steps)):
        cl = net.clique_of(idx)
        if cl is None or cl != prev_clique:
            current = idx
        run_of.append(current)
        prev_clique = cl if cl is not None else object()
    return run_of


def _runs(net: TaskNetwork) -> List[List[int]]:
    run_of = _run_index(net)
    out: List[List[int]] = []
    for idx in range(len(net.steps)):
        if run_of[idx] == idx:
            out.append([idx])
        else:
            out[-1].append(idx)
    return out


def _toposort(nodes: Sequence[int], edges: Sequence[Tuple[int, int]]) -> List[int]:
    preds: Dict[int, Set[int]] = {v: set() for v in nodes}
    for a, b in edges:
        preds[b].add(a)
    order: List[int] = []
    placed: Set[int] = set()
    while len(order) < len(nodes):
        ready = sorted(v for v in nodes
                       if v not in placed and preds[v] <= placed)
        if not ready:
            raise NetworkContradictionError("cyclic chains inside a clique")
        order.append(ready[0])
        placed.add(ready[0])
    return order


def _chain_paths(nodes: Sequence[int], edges: Sequence[Tuple[int, int]]
                 ) -> Optional[List[int]]:
    """If the chain edges form vertex-disjoint paths, return path lengths."""
    succ: Dict[int, int] = {}
    pred: Dict[int, int] = {}
    for a, b in edges:
        if a in succ or b in pred:
            return None
        succ[a] = b
        pred[b] = a
    lengths = []
    for v in nodes:
        if v not in pred:  # path head
            size = 1
            while v in succ:
                v = succ[v]
                size += 1
            lengths.append(size)
    if sum(lengths) != len(nodes):
        return None  # a cycle slipped through
    return lengths


def _count_run(nodes: Sequence[int], edges: List[Tuple[int, int]]) -> int:
    if len(nodes) <= 1:
        return 1
    paths = _chain_paths(nodes, edges)
    if paths is not None:
        total = math.factorial(len(nodes))
        for p in paths:
            total //= math.factorial(p)
        return total
    if len(nodes) > 18:
        raise BankError("run too large for exact counting")
    # bitmask DP over antichains
    idx = {v: i for i, v in enumerate(nodes)}
    pred_mask = [0] * len(nodes)
    for a, b in edges:
        pred_mask[idx[b]] |= 1 << idx[a]
    counts = [0] * (1 << len(nodes))
    counts[0] = 1
    for mask in range(1 << len(nodes)):
        c = counts[mask]
        if not c:
            continue
        for i in range(len(nodes)):
            bit = 1 << i
            if not mask & bit and (pred_mask[i] & mask) == pred_mask[i]:
                counts[mask | bit] += c
    return counts[-1]


def count_linearizations(net: TaskNetwork) -> int:
    """Number of valid linearizations (product over clique runs)."""
    validate_network(net)
    total = 1
    for run in _runs(net):
        edges = [(a, b) for a, b in net.chains if a in run and b in run]
        total *= _count_run(run, edges)
    return total


def _enumerate_run(nodes: Sequence[int], edges: List[Tuple[int, int]]
                   ) -> Iterable[Tuple[int, ...]]:
    preds: Dict[int, Set[int]] = {v: set() for v in nodes}
    for a, b in edges:
        preds[b].add(a)

    def rec(placed: Tuple[int, ...], remaining: Set[int]):
        if not remaining:
            yield placed
            return
        done = set(placed)
        for v in sorted(remaining):
            if preds[v] <= done:
                yield from rec(placed + (v,), remaining - {v})

    yield from rec((), set(nodes))


def _sample_run(nodes: Sequence[int], edges: List[Tuple[int, int]],
                rng: random.Random) -> Tuple[int, ...]:
    paths = _chain_paths(nodes, edges)
    if paths is not None:
        heads = []
        succ = {a: b for a, b in edges}
        pred_set = {b for _, b in edges}
        for v in nodes:
            if v not in pred_set:
                heads.append(v)
        slots: List[int] = []
        for hi, h in enumerate(heads):
            size = 1
            v = h
            while v in succ:
                v = succ[v]
                size += 1
            slots.extend([hi] * size)
        rng.shuffle(slots)
        cursors = list(heads)
        out = []
        for hi in slots:
            out.append(cursors[hi])
            cursors[hi] = succ.get(cursors[hi], -1)
        return tuple(out)
    # rejection sampling against the chain constraints
    preds = [(a, b) for a, b in edges]
    order = list(nodes)
    while True:
        rng.shuffle(order)
        pos = {v: i for i, v in enumerate(order)}
        if all(pos[a] < pos[b] for a, b in preds):
            return tuple(order)


def linearizations(net: TaskNetwork, cap: Optional[int] = None,
                   seed: int = 0) -> List[Tuple[str, ...]]:
    """Valid step sequences of the network, as template-key tuples.

    With ``cap=None`` (or a cap at least the true count) this enumerates all
    of them in a deterministic order.  Otherwise it draws ``cap`` distinct
    sequences uniformly, seeded.
    """
    total = count_linearizations(net)
    runs = _runs(net)
    run_edges = [[(a, b) for a, b in net.chains if a in run and b in run]
                 for run in runs]
    if cap is None or total <= cap:
        per_run = [list(_enumerate_run(run, edges))
                   for run, edges in zip(runs, run_edges)]
        out = []
        for combo in itertools.product(*per_run):
            order = [i for part in combo for i in part]
            out.append(tuple(net.steps[i] for i in order))
        return out
    rng = random.Random(f"lin:{seed}")
    seen: Set[Tuple[int, ...]] = set()
    out = []
    while len(out) < cap:
        order = tuple(i for run, edges in zip(runs, run_edges)
                      for i in _sample_run(run, edges, rng))
        if order in seen:
            continue
        seen.add(order)
        out.append(tuple(net.steps[i] for i in order))
    return out


@dataclass
class PolicyBank:
    """Materialized linearizations per goal."""

    policies: Dict[str, Tuple[Tuple[str, ...], ...]]
    cap: int
    seed: int

    def sequences(self, goal_id: str) -> Tuple[Tuple[str, ...], ...]:
        try:
            return self.policies[goal_id]
        except KeyError:
            raise BankError(f"no policies for goal {goal_id!r}")

    def pooled(self, goal_ids: Iterable[str]) -> List[Tuple[str, ...]]:
        out: List[Tuple[str, ...]] = []
        for g in sorted(set(goal_ids)):
            out.extend(self.sequences(g))
        return out


def build_policy_bank(bank: GoalBank, domain: Optional[DomainSpec] = None,
                      cap: int = 200, seed: int = 0,
                      validate: bool = True) -> PolicyBank:
    """Expand every goal's network into (capped, seeded) linearizations.

    When a domain is given, each sequence is replayed from the initial state
    so the bank ships only executable policies.
    """
    policies = {}
    for gid in bank.goal_ids():
        seqs = tuple(linearizations(bank.goals[gid].network, cap=cap, seed=seed))
        if validate and domain is not None:
            for seq in seqs:
                try:
                    replay(seq, domain)
                except DomainError as exc:
                    raise BankError(
                        f"goal {gid!r}: linearization not executable: {exc}"
                    ) from exc
        policies[gid] = seqs
    return PolicyBank(policies=policies, cap=cap, seed=seed)


# -- precedence helpers (mistake detection, sim-human consistency) -----------

def forced_predecessors(net: TaskNetwork) -> List[Set[int]]:
    """For each step, the steps that must precede it in every linearization."""
    n = len(net.steps)
    run_of = _run_index(net)
    direct: List[Set[int]] = [set() for _ in range(n)]
    for j in range(n):
        for i in range(j):
            if run_of[i] != run_of[j]:
                direct[j].add(i)
    for a, b in net.chains:
        direct[b].add(a)
    # transitive closure, in index order then chain fixpoint
    changed = True
    while changed:
        changed = False
        for j in range(n):
            extra = set()
            for i in direct[j]:
                extra |= direct[i]
            if not extra <= direct[j]:
                direct[j] |= extra
                changed = True
    return direct


def valid_next_steps(net: TaskNetwork, executed: Set[str]) -> Set[str]:
    """Templates that can legally come next given already-executed templates.

    A step qualifies if it has not run yet and all of its forced
    predecessors have.  Duplicate templates inside one network are not
    supported (bundled recipes never repeat a step).
    """
    preds = forced_predecessors(net)
    done_idx = {i for i, s in enumerate(net.steps) if s in executed}
    out = set()
    for i, s in enumerate(net.steps):
        if i in done_idx:
            continue
        if all(p in done_idx for p in preds[i]):
            out.add(s)
    return out


# -- text format --------------------------------------------------------------

_HEADER = "goalbank v1"
_GOAL_RE = re.compile(
    r'goal\s+(\w+)\s+type=(\w+)\s+vessel=(\w+)\s+"([^"]*)"\s*$')


def parse_goal_bank(text: str) -> GoalBank:
    """Parse the goal-bank text schema (versioned header line first)."""
    lines = text.splitlines()
    header_seen = False
    preferences: Optional[Tuple[str, ...]] = None
    goals: Dict[str, Goal] = {}
    goal_prefs: Dict[str, Tuple[str, ...]] = {}

    cur_id: Optional[str] = None
    cur_meta: Tuple[str, str, str] = ("", "", "")
    steps: List[str] = []
    chains: List[Tuple[int, int]] = []
    cliques: List[Tuple[int, ...]] = []
    prefs: List[str] = []

    def flush(line_no: int) -> None:
        nonlocal cur_id
        if cur_id is None:
            return
        if not steps:
            raise BankParseError(f"goal {cur_id} has no steps", line_no)
        if not prefs:
            raise BankParseError(f"goal {cur_id} lists no preferences", line_no)
        net = TaskNetwork(tuple(steps), tuple(chains), tuple(cliques))
        try:
            validate_network(net)
        except BankError as exc:
            raise BankParseError(f"goal {cur_id}: {exc}", line_no)
        rtype, vessel, title = cur_meta
        goals[cur_id] = Goal(cur_id, title, rtype, vessel, net)
        goal_prefs[cur_id] = tuple(prefs)
        cur_id = None
        steps.clear(), chains.clear(), cliques.clear(), prefs.clear()

    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != _HEADER:
                raise BankParseError(
                    f"expected header {_HEADER!r}, got {line!r}", line_no)
            header_seen = True
            continue
        if line.startswith("preferences:"):
            if preferences is not None:
                raise BankParseError("duplicate preferences section", line_no)
            preferences = tuple(
                p.strip() for p in line.partition(":")[2].split(",") if p.strip())
            continue
        if line.startswith("goal "):
            flush(line_no)
            m = _GOAL_RE.match(line)
            if m is None:
                raise BankParseError("malformed goal line", line_no)
            gid, rtype, vessel, title = m.groups()
            if gid in goals:
                raise BankParseError(f"duplicate goal id {gid!r}", line_no)
            cur_id = gid
            cur_meta = (rtype, vessel, title)
            continue
        if cur_id is None:
            raise BankParseError(f"directive outside a goal: {line!r}", line_no)
        if line.startswith("step "):
            steps.append(line[len("step "):].strip())
        elif line.startswith("chain "):
            m = re.fullmatch(r"chain\s+(\d+)\s*->\s*(\d+)", line)
            if m is None:
                raise BankParseError("malformed chain line", line_no)
            chains.append((int(m.group(1)), int(m.group(2))))
        elif line.startswith("clique "):
            try:
                members = tuple(int(x) for x in line[len("clique "):].split(","))
            except ValueError:
                raise BankParseError("malformed clique line", line_no)
            cliques.append(members)
        elif line.startswith("prefs "):
            prefs.extend(p.strip() for p in line[len("prefs "):].split(",") if p.strip())
        else:
            raise BankParseError(f"unknown directive: {line!r}", line_no)
    flush(len(lines))

    if not header_seen:
        raise BankParseError("empty goal-bank file", 0)
    if preferences is None:
        raise BankParseError("missing preferences section", 0)
    if not goals:
        raise BankParseError("no goals defined", 0)
    vocab = set(preferences)
    for gid, ps in goal_prefs.items():
        unknown = set(ps) - vocab
        if unknown:
            raise BankError(f"goal {gid} uses undeclared prefs: {sorted(unknown)}")
    used = {p for ps in goal_prefs.values() for p in ps}
    unused = vocab - used
    if unused:
        raise BankError(f"preferences mapped to no goal: {sorted(unused)}")
    return GoalBank(goals=goals, preferences=preferences, goal_prefs=goal_prefs)


def load_goal_bank(path: str) -> GoalBank:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_goal_bank(fh.read())


def write_goal_bank(bank: GoalBank, path: str) -> None:
    """Serialize a bank in the text schema (used by the data generator)."""
    out = [_HEADER, ""]
    out.append("preferences: " + ", ".join(bank.preferences))
    out.append("")
    for gid in bank.goal_ids():
        g = bank.goals[gid]
        out.append(f'goal {gid} type={g.recipe_type} vessel={g.vessel} "{g.title}"')
        for s in g.network.steps:
            out.append(f"  step {s}")
        for members in g.network.cliques:
            out.append("  clique " + ",".join(str(m) for m in members))
        for a, b in g.network.chains:
            out.append(f"  chain {a} -> {b}")
        out.append("  prefs " + ", ".join(bank.goal_prefs[gid]))
        out.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# -- experiments --------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """One episode setup: a preference pair and the sampled true goal."""

    pref_a: str
    pref_b: str
    true_goal: str
    seed: int

    @property
    def key(self) -> str:
        return f"{self.pref_a}+{self.pref_b}"


def generate_experiments(bank: GoalBank, seed: int = 0) -> List[ExperimentSpec]:
    """One spec per unordered preference pair with a non-empty goal
    intersection; the true goal is drawn uniformly from the intersection,
    deterministically in ``seed`` and the pair."""
    specs = []
    for pa, pb in itertools.combinations(sorted(bank.preferences), 2):
        inter = sorted(set(bank.goals_for_pref(pa)) & set(bank.goals_for_pref(pb)))
        if not inter:
            continue
        rng = random.Random(f"exp:{seed}:{pa}|{pb}")
        specs.append(ExperimentSpec(pa, pb, rng.choice(inter), seed))
    return specs
