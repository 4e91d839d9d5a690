"""Turn-based cooking world: ground literals, verb rules, deterministic transitions.

The kitchen is fully observable and deterministic.  A world state is a frozen
set of ground literals plus a turn indicator and a step counter.  Verb
semantics come from a line-oriented domain file (see docs/formats.md); each of
the nine verbs has exactly one rule template with preconditions and effects
over ``predicate(arg, ...)`` literals.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

VERBS = frozenset({
    "gather", "pour", "mix", "cook", "turn_on",
    "collect_water", "blend", "reduce_heat", "serve",
})
AGENTS = ("human", "robot")
WAIT_VERB = "wait"  # turn-passing pseudo-action, never produced by legal_actions

# Predicates that are functions of their first argument: adding a new literal
# replaces any existing literal with the same (predicate, first-arg) key.
FUNCTIONAL_PREDICATES = frozenset({"at", "cond"})

CONDITIONS = ("raw", "simmering", "blended", "cooked", "mixed", "served")


class DomainError(Exception):
    """Base class for world-model errors."""


class DomainParseError(DomainError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class WrongTurnError(DomainError):
    pass


class IllegalActionError(DomainError):
    pass


@dataclass(frozen=True, order=True)
class ActionInstance:
    """A ground action: verb, primary argument, pour destination, acting agent.

    ``item`` holds the rule's declared argument, which is an item for most
    verbs, an appliance for turn_on and a container for serve.  Only pour has
    a destination.  ``collect_water`` takes no argument at all.
    """

    verb: str
    item: Optional[str] = None
    destination: Optional[str] = None
    agent: str = "robot"

    def __post_init__(self) -> None:
        if self.verb not in VERBS and self.verb != WAIT_VERB:
            raise IllegalActionError(f"unknown verb: {self.verb!r}")
        if self.destination is not None and self.verb != "pour":
            raise IllegalActionError(f"{self.verb} takes no destination")
        if self.verb == "pour" and self.destination is None:
            raise IllegalActionError("pour requires a destination")
        if self.agent not in AGENTS:
            raise IllegalActionError(f"unknown agent: {self.agent!r}")

    def template_key(self) -> str:
        """Agent-free identifier, e.g. ``pour(oats,pot)`` or ``collect_water``."""
        if self.item is None:
            return self.verb
        if self.destination is None:
            return f"{self.verb}({self.item})"
        return f"{self.verb}({self.item},{self.destination})"

    def __str__(self) -> str:
        return f"{self.template_key()}[{self.agent}]"


WAIT_HUMAN = ActionInstance(WAIT_VERB, agent="human")
WAIT_ROBOT = ActionInstance(WAIT_VERB, agent="robot")


def wait_action(agent: str) -> ActionInstance:
    return WAIT_HUMAN if agent == "human" else WAIT_ROBOT


def parse_template_key(key: str, agent: str = "robot") -> ActionInstance:
    """Inverse of :meth:`ActionInstance.template_key`."""
    m = re.fullmatch(r"(\w+)(?:\(([\w,]*)\))?", key.strip())
    if m is None:
        raise IllegalActionError(f"bad action key: {key!r}")
    verb, argstr = m.group(1), m.group(2)
    args = [a for a in (argstr.split(",") if argstr else []) if a]
    item = args[0] if args else None
    dest = args[1] if len(args) > 1 else None
    return ActionInstance(verb, item, dest, agent)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot: ground literals, whose turn it is, steps so far."""

    literals: frozenset
    turn: str = "human"
    step_index: int = 0

    def holds(self, *atom: str) -> bool:
        return tuple(atom) in self.literals

    def location_of(self, item: str) -> Optional[str]:
        for lit in self.literals:
            if lit[0] == "at" and lit[1] == item:
                return lit[2]
        return None

    def is_terminal(self) -> bool:
        """The episode is over once any container has been served."""
        return any(lit[0] == "served" for lit in self.literals)


@dataclass(frozen=True)
class Rule:
    """One verb template.  Args are constants, ?vars, or %group wildcards."""

    verb: str
    params: Tuple[Tuple[str, str], ...]  # (variable, sort) pairs
    pre: Tuple[Tuple[bool, Tuple[str, ...]], ...]  # (negated, atom)
    eff: Tuple[Tuple[str, Tuple[str, ...]], ...]  # ('+'|'-', atom)


@dataclass
class DomainSpec:
    """Parsed domain: object inventory, groups, one rule per verb."""

    items: Tuple[str, ...]
    containers: Tuple[str, ...]
    appliances: Tuple[str, ...]
    locations: Tuple[str, ...]
    groups: Dict[str, Tuple[str, ...]]
    rules: Dict[str, Rule]
    start_location: Dict[str, str] = field(default_factory=dict)
    _ground: Dict[str, List[Tuple[ActionInstance, Rule, Dict[str, str]]]] = field(
        default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.groups = dict(self.groups)
        self.groups.setdefault("items", self.items)
        self.groups.setdefault("containers", self.containers)
        self.groups.setdefault("appliances", self.appliances)
        self.groups.setdefault("locations", self.locations)

    def sort_members(self, sort: str) -> Tuple[str, ...]:
        try:
            return self.groups[sort]
        except KeyError:
            raise DomainError(f"unknown sort: {sort!r}")

    def initial_state(self) -> WorldState:
        """Everything shelved (unless overridden), raw, human to move."""
        lits = set()
        for item in self.items:
            lits.add(("at", item, self.start_location.get(item, "shelf")))
            lits.add(("cond", item, "raw"))
        return WorldState(frozenset(lits), turn="human", step_index=0)

    # -- grounding ---------------------------------------------------------

    def ground_actions(self, agent: str) -> List[Tuple[ActionInstance, Rule, Dict[str, str]]]:
        """All ground (action, rule, binding) triples for one agent, sorted."""
        if agent not in self._ground:
            out = []
            for verb in sorted(self.rules):
                rule = self.rules[verb]
                domains = [self.sort_members(sort) for _, sort in rule.params]
                for combo in itertools.product(*domains):
                    binding = {var: val for (var, _), val in zip(rule.params, combo)}
                    item = combo[0] if combo else None
                    dest = combo[1] if len(combo) > 1 else None
                    out.append((ActionInstance(verb, item, dest, agent), rule, binding))
            out.sort(key=lambda t: (t[0].verb, t[0].item or "", t[0].destination or ""))
            self._ground[agent] = out
        return self._ground[agent]

    def templates(self) -> List[str]:
        """Every ground action template key, sorted."""
        return [a.template_key() for a, _, _ in self.ground_actions("robot")]


def _substitute(atom: Tuple[str, ...], binding: Dict[str, str]) -> Tuple[str, ...]:
    return (atom[0],) + tuple(binding.get(a, a) for a in atom[1:])


def _atom_holds(atom: Tuple[str, ...], literals: frozenset, spec: DomainSpec) -> bool:
    """Ground-atom membership; %group args mean 'for some member'."""
    wild = [i for i, a in enumerate(atom) if isinstance(a, str) and a.startswith("%")]
    if not wild:
        return atom in literals
    pools = [spec.sort_members(atom[i][1:]) for i in wild]
    for combo in itertools.product(*pools):
        probe = list(atom)
        for i, val in zip(wild, combo):
            probe[i] = val
        if tuple(probe) in literals:
            return True
    return False


def _preconditions_met(rule: Rule, binding: Dict[str, str], literals: frozenset,
                       spec: DomainSpec) -> bool:
    for negated, atom in rule.pre:
        ok = _atom_holds(_substitute(atom, binding), literals, spec)
        if ok is negated:
            return False
    return True


def legal_actions(state: WorldState, spec: DomainSpec, agent: str) -> List[ActionInstance]:
    """Every rule-sanctioned ground action for ``agent``, lexicographically sorted.

    Terminal states (anything served) admit no actions.  The ordering is part
    of the contract: downstream tie-breaking depends on it.
    """
    if agent not in AGENTS:
        raise DomainError(f"unknown agent: {agent!r}")
    if state.is_terminal():
        return []
    lits = state.literals
    return [a for a, rule, binding in spec.ground_actions(agent)
            if _preconditions_met(rule, binding, lits, spec)]


def _binding_for(action: ActionInstance, rule: Rule, spec: DomainSpec) -> Dict[str, str]:
    args = [a for a in (action.item, action.destination) if a is not None]
    if len(args) != len(rule.params):
        raise IllegalActionError(f"{action} has wrong arity for rule {rule.verb}")
    binding = {}
    for (var, sort), val in zip(rule.params, args):
        if val not in spec.sort_members(sort):
            raise IllegalActionError(f"{action}: {val!r} is not a {sort}")
        binding[var] = val
    return binding


def step(state: WorldState, action: ActionInstance, spec: DomainSpec) -> WorldState:
    """Apply one action; returns the successor with the turn flipped.

    Raises WrongTurnError if it is not the actor's turn and IllegalActionError
    if the action is unknown, ill-typed, terminal-state, or has unmet
    preconditions.  Literals not named in the rule's effects are unchanged;
    adding an ``at``/``cond`` literal replaces the old value for that object.
    """
    if action.agent != state.turn:
        raise WrongTurnError(f"{action.agent} acted on {state.turn}'s turn")
    nxt = "robot" if state.turn == "human" else "human"
    if action.verb == WAIT_VERB:
        return WorldState(state.literals, nxt, state.step_index + 1)
    if state.is_terminal():
        raise IllegalActionError("the dish is already served")
    rule = spec.rules.get(action.verb)
    if rule is None:
        raise IllegalActionError(f"no rule for verb {action.verb!r}")
    binding = _binding_for(action, rule, spec)
    if not _preconditions_met(rule, binding, state.literals, spec):
        raise IllegalActionError(f"preconditions of {action} not met")
    lits = set(state.literals)
    for sign, atom in rule.eff:
        ground = _substitute(atom, binding)
        if sign == "-":
            lits.discard(ground)
            continue
        if ground[0] in FUNCTIONAL_PREDICATES:
            key = (ground[0], ground[1])
            lits = {l for l in lits if (l[0], l[1]) != key}
        lits.add(ground)
    return WorldState(frozenset(lits), nxt, state.step_index + 1)


def is_legal(state: WorldState, action: ActionInstance, spec: DomainSpec) -> bool:
    """Whether ``step`` would accept the action, turn aside."""
    if state.is_terminal():
        return False
    rule = spec.rules.get(action.verb)
    if rule is None:
        return False
    try:
        binding = _binding_for(action, rule, spec)
    except IllegalActionError:
        return False
    return _preconditions_met(rule, binding, state.literals, spec)


def action_effects(action: ActionInstance,
                   spec: DomainSpec) -> List[Tuple[str, Tuple[str, ...]]]:
    """Ground (sign, literal) effects the action would apply."""
    rule = spec.rules.get(action.verb)
    if rule is None:
        raise IllegalActionError(f"no rule for verb {action.verb!r}")
    binding = _binding_for(action, rule, spec)
    return [(sign, _substitute(atom, binding)) for sign, atom in rule.eff]


def effects_hold(state: WorldState, action: ActionInstance, spec: DomainSpec) -> bool:
    """True when the action would change nothing (its effects already hold)."""
    for sign, ground in action_effects(action, spec):
        held = _atom_holds(ground, state.literals, spec)
        if sign == "+" and not held:
            return False
        if sign == "-" and held:
            return False
    return True


def replay(templates: Sequence[str], spec: DomainSpec,
           state: Optional[WorldState] = None) -> WorldState:
    """Execute template keys in order, each by whichever agent's turn it is.

    Used to validate that a linearization is executable from the initial
    state regardless of how turns interleave.
    """
    st = spec.initial_state() if state is None else state
    for key in templates:
        st = step(st, parse_template_key(key, st.turn), spec)
    return st


# -- domain file parser -----------------------------------------------------

_SECTIONS = ("items", "containers", "appliances", "locations")
_ATOM_RE = re.compile(r"([!+-]?)(\w+)\(([^)]*)\)")
_RULE_RE = re.compile(
    r"rule\s+(\w+)\s*(?:\(([^)]*)\))?\s*:\s*pre\s*\{([^}]*)\}\s*eff\s*\{([^}]*)\}\s*$")


def _parse_name_list(body: str, line_no: int) -> List[Tuple[str, Optional[str]]]:
    out = []
    for raw in body.split(","):
        name = raw.strip()
        if not name:
            continue
        if "@" in name:
            name, _, loc = name.partition("@")
            out.append((name.strip(), loc.strip()))
        else:
            out.append((name, None))
        if not re.fullmatch(r"\w+", out[-1][0]):
            raise DomainParseError(f"bad identifier {out[-1][0]!r}", line_no)
    return out


def _parse_atoms(body: str, line_no: int) -> List[Tuple[str, Tuple[str, ...]]]:
    atoms = []
    rest = body.strip()
    if not rest:
        return atoms
    pos = 0
    for m in _ATOM_RE.finditer(rest):
        between = rest[pos:m.start()].strip().strip(",").strip()
        if between:
            raise DomainParseError(f"unparseable literal text {between!r}", line_no)
        sign, pred, argstr = m.groups()
        args = tuple(a.strip() for a in argstr.split(",") if a.strip())
        if not args:
            raise DomainParseError(f"{pred}: literals need at least one argument", line_no)
        atoms.append((sign, (pred,) + args))
        pos = m.end()
    tail = rest[pos:].strip().strip(",").strip()
    if tail:
        raise DomainParseError(f"unparseable literal text {tail!r}", line_no)
    return atoms


def parse_domain(text: str) -> DomainSpec:
    """Parse the line-oriented domain format.  See docs/formats.md."""
    sections: Dict[str, List[Tuple[str, Optional[str]]]] = {s: [] for s in _SECTIONS}
    seen_sections = set()
    groups: Dict[str, Tuple[str, ...]] = {}
    rules: Dict[str, Rule] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("rule "):
            m = _RULE_RE.match(line)
            if m is None:
                raise DomainParseError("malformed rule line", line_no)
            verb, paramstr, prestr, effstr = m.groups()
            if verb not in VERBS:
                raise DomainParseError(f"unknown verb {verb!r}", line_no)
            if verb in rules:
                raise DomainParseError(f"duplicate rule for {verb!r}", line_no)
            params = []
            for p in (paramstr or "").split(","):
                p = p.strip()
                if not p:
                    continue
                if ":" not in p or not p.startswith("?"):
                    raise DomainParseError(f"bad parameter {p!r} (want ?var:sort)", line_no)
                var, _, sort = p.partition(":")
                params.append((var.strip(), sort.strip()))
            pre = []
            for sign, atom in _parse_atoms(prestr, line_no):
                if sign in ("+", "-"):
                    raise DomainParseError("effect sign in precondition", line_no)
                pre.append((sign == "!", atom))
            eff = []
            for sign, atom in _parse_atoms(effstr, line_no):
                if sign == "!":
                    raise DomainParseError("negation in effect", line_no)
                eff.append((sign or "+", atom))
            rules[verb] = Rule(verb, tuple(params), tuple(pre), tuple(eff))
            continue
        if line.startswith("group "):
            name, _, body = line[len("group "):].partition(":")
            name = name.strip()
            if not name or not body:
                raise DomainParseError("malformed group line", line_no)
            if name in groups or name in _SECTIONS:
                raise DomainParseError(f"duplicate group {name!r}", line_no)
            groups[name] = tuple(n for n, _ in _parse_name_list(body, line_no))
            continue
        head, sep, body = line.partition(":")
        head = head.strip()
        if sep and head in _SECTIONS:
            if head in seen_sections:
                raise DomainParseError(f"duplicate section {head!r}", line_no)
            seen_sections.add(head)
            sections[head] = _parse_name_list(body, line_no)
            continue
        raise DomainParseError(f"unknown section or directive {head!r}", line_no)

    for s in _SECTIONS:
        if not sections[s]:
            raise DomainParseError(f"missing section {s!r}", 0)

    declared = {n for sec in sections.values() for n, _ in sec}
    start_location = {}
    for name, loc in sections["items"]:
        if loc is not None:
            if loc not in {n for n, _ in sections["locations"]}:
                raise DomainParseError(f"unknown start location {loc!r} for {name}", 0)
            start_location[name] = loc
    for gname, members in groups.items():
        for mem in members:
            if mem not in declared:
                raise DomainParseError(f"group {gname!r} names undeclared {mem!r}", 0)

    spec = DomainSpec(
        items=tuple(n for n, _ in sections["items"]),
        containers=tuple(n for n, _ in sections["containers"]),
        appliances=tuple(n for n, _ in sections["appliances"]),
        locations=tuple(n for n, _ in sections["locations"]),
        groups=groups,
        rules=rules,
        start_location=start_location,
    )

    # Rules may only mention declared names, their own vars, or known groups.
    for rule in rules.values():
        vars_ok = {v for v, _ in rule.params}
        for _, sort in rule.params:
            spec.sort_members(sort)
        for atom in [a for _, a in rule.pre] + [a for _, a in rule.eff]:
            for arg in atom[1:]:
                if arg.startswith("?"):
                    if arg not in vars_ok:
                        raise DomainParseError(
                            f"rule {rule.verb}: unbound variable {arg!r}", 0)
                elif arg.startswith("%"):
                    spec.sort_members(arg[1:])
                elif arg not in declared and arg not in CONDITIONS:
                    raise DomainParseError(
                        f"rule {rule.verb}: undeclared name {arg!r}", 0)
    missing = VERBS - set(rules)
    if missing:
        raise DomainParseError(f"missing rules for: {', '.join(sorted(missing))}", 0)
    return spec


def load_domain(path: str) -> DomainSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_domain(fh.read())
