"""Receding-horizon planning over attractor scores.

From the robot's turn, expand a shallow alternating-turn tree keeping the
top-K scoring actions at every node, charge each root-to-leaf branch the
negated sum of its action scores, and return the first action of the
cheapest branch.  Ties break lexicographically on the first action's
template key, then on the remaining branch keys, so planning is exactly
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .attractor import AttractorField, ScoreWeights, aggregate_score
from .world import ActionInstance, DomainSpec, IllegalActionError, WorldState, step


class PlannerError(Exception):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 2
    top_k: int = 4
    include_human_scores: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise PlannerError("horizon must be at least 1")
        if self.top_k < 1:
            raise PlannerError("top_k must be at least 1")


@dataclass(frozen=True)
class ScoringContext:
    """Everything needed to score an action during expansion.

    candidate_filter, when set, prunes the robot's own candidate actions
    (predicted human moves are never filtered; the tree models what the
    human might do, not what we would permit).  ``bonus`` adds a flat
    per-template increment on top of the aggregate score.
    """

    goal_fields: Mapping[str, AttractorField]
    belief_probs: Mapping[str, float]
    pref_fields: Mapping[str, AttractorField] = field(default_factory=dict)
    weights: ScoreWeights = ScoreWeights()
    candidate_filter: Optional[Callable[[ActionInstance], bool]] = None
    bonus: Mapping[str, float] = field(default_factory=dict)

    def score(self, action: ActionInstance) -> float:
        base = aggregate_score(action, self.goal_fields, self.belief_probs,
                               self.pref_fields, self.weights)
        return base + self.bonus.get(action.template_key(), 0.0)


@dataclass
class PlanNode:
    """One expanded state; ``action`` is the move that produced it (None at root)."""

    state: WorldState
    action: Optional[ActionInstance]
    score: float
    depth: int
    children: List["PlanNode"] = field(default_factory=list)


def _expand_node(node: PlanNode, spec: DomainSpec, config: PlannerConfig,
                 ctx: ScoringContext, robot_agent: str) -> None:
    if node.depth >= config.horizon or node.state.is_terminal():
        return
    agent = node.state.turn
    candidates = []
    for action, _, _ in spec.ground_actions(agent):
        if (agent == robot_agent and ctx.candidate_filter is not None
                and not ctx.candidate_filter(action)):
            continue
        candidates.append((-ctx.score(action), action.template_key(), action))
    candidates.sort(key=lambda c: (c[0], c[1]))
    kept = 0
    for neg_score, _, action in candidates:
        if kept >= config.top_k:
            break
        try:
            child_state = step(node.state, action, spec)
        except IllegalActionError:
            continue
        child = PlanNode(state=child_state, action=action, score=-neg_score,
                         depth=node.depth + 1)
        node.children.append(child)
        kept += 1
        _expand_node(child, spec, config, ctx, robot_agent)


def expand(state: WorldState, spec: DomainSpec, config: PlannerConfig,
           ctx: ScoringContext, robot_agent: str = "robot") -> PlanNode:
    """Build the lookahead tree rooted at the robot's current turn."""
    if state.turn != robot_agent:
        raise PlannerError(f"planning requires it to be {robot_agent}'s turn")
    root = PlanNode(state=state, action=None, score=0.0, depth=0)
    _expand_node(root, spec, config, ctx, robot_agent)
    return root


def branch_cost(path: Sequence[PlanNode], robot_agent: str = "robot",
                include_human_scores: bool = True) -> float:
    """Negated score sum along a branch (root node excluded).

    The agent who took a node's action is the turn-holder of the previous
    state, so the root's child is always the robot's move.
    """
    cost = 0.0
    prev_turn = None
    for i, node in enumerate(path):
        if node.action is None:
            prev_turn = node.state.turn
            continue
        if include_human_scores or prev_turn == robot_agent:
            cost -= node.score
        prev_turn = node.state.turn
    return cost


@dataclass(frozen=True)
class PlannedChoice:
    action: ActionInstance
    path: Tuple[ActionInstance, ...]
    cost: float
    score: float


def _leaf_paths(root: PlanNode) -> List[List[PlanNode]]:
    paths: List[List[PlanNode]] = []
    stack: List[List[PlanNode]] = [[root]]
    while stack:
        path = stack.pop()
        node = path[-1]
        if not node.children:
            paths.append(path)
            continue
        for child in node.children:
            stack.append(path + [child])
    return paths


def select_action(state: WorldState, spec: DomainSpec, config: PlannerConfig,
                  ctx: ScoringContext, robot_agent: str = "robot") -> Optional[PlannedChoice]:
    """Cheapest-branch first action, or None when the robot has no candidate.

    Branches are ranked by cost, then by the first action's template key,
    then by the full branch key sequence.
    """
    root = expand(state, spec, config, ctx, robot_agent)
    if not root.children:
        return None
    best: Optional[Tuple[float, str, Tuple[str, ...], List[PlanNode]]] = None
    for path in _leaf_paths(root):
        if len(path) < 2:
            continue
        cost = branch_cost(path, robot_agent, config.include_human_scores)
        first_key = path[1].action.template_key()
        branch_key = tuple(n.action.template_key() for n in path[1:])
        entry = (cost, first_key, branch_key, path)
        if best is None or entry[:3] < best[:3]:
            best = entry
    if best is None:
        return None
    cost, _, _, path = best
    return PlannedChoice(action=path[1].action,
                         path=tuple(n.action for n in path[1:]),
                         cost=cost,
                         score=path[1].score)
