"""
Symbolic half of the monitor: world states, goal grounding, plan search
and the logical checks (reachability, safe configuration, valid transitions).

Search is breadth-first over ground actions in a fixed lexicographic order,
so plans are shortest and byte-for-byte reproducible.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .config import TaskContext
from .constants import FUNCTIONAL_PREDICATES, PLANNER_MAX_DEPTH, PLANNER_MAX_STATES
from .errors import GroundingError, PlanningError
from .intent import Action
from .pddl import DomainDef, Fact, ProblemDef

logger = logging.getLogger(__name__)

REACHABILITY = 'reachability'
SAFE_CONFIGURATION = 'safe_configuration'
TRANSITION = 'transition'

_SAFE = ('safe-configuration',)


# ============================================================================
# STATE AND ACTIONS
# ============================================================================

def _invariant_problems(facts: FrozenSet[Fact]) -> List[str]:
    """Robots holding and empty-handed at once, or with several locations/orientations."""
    problems = []
    holding = {f[1] for f in facts if f[0] == 'holding'}
    empty = {f[1] for f in facts if f[0] == 'empty-handed'}
    for robot in sorted(holding & empty):
        problems.append(f"robot '{robot}' is both holding an item and empty-handed")
    for pred in FUNCTIONAL_PREDICATES:
        seen: Dict[str, int] = {}
        for f in facts:
            if f[0] == pred and len(f) > 1:
                seen[f[1]] = seen.get(f[1], 0) + 1
        problems.extend(f"robot '{r}' has {n} '{pred}' facts" for r, n in sorted(seen.items()) if n > 1)
    return problems


@dataclass(frozen=True)
class WorldState:
    """Closed-world set of ground facts over typed objects."""

    facts: FrozenSet[Fact]
    objects: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'facts', frozenset(tuple(f) for f in self.facts))
        object.__setattr__(self, 'objects', tuple(sorted(self.objects)))
        problems = _invariant_problems(self.facts)
        if problems:
            raise PlanningError('invalid world state: ' + '; '.join(problems))

    @classmethod
    def from_problem(cls, problem: ProblemDef) -> 'WorldState':
        return cls(problem.init, problem.objects)

    def holds(self, fact: Fact) -> bool:
        return tuple(fact) in self.facts

    def sorted_facts(self) -> List[Fact]:
        return sorted(self.facts)

    def object_type(self, name: str) -> Optional[str]:
        return dict(self.objects).get(name)


@dataclass(frozen=True)
class GroundAction:
    """Action schema bound to objects; compiled precondition and effect sets ride along."""

    name: str
    args: Tuple[str, ...]
    preconditions: FrozenSet[Fact] = field(default=frozenset(), compare=False, repr=False)
    add_effects: FrozenSet[Fact] = field(default=frozenset(), compare=False, repr=False)
    del_effects: FrozenSet[Fact] = field(default=frozenset(), compare=False, repr=False)
    locations: Tuple[str, ...] = field(default=(), compare=False, repr=False)

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"


@dataclass(frozen=True)
class Goal:
    """Nonempty conjunction of ground facts."""

    facts: Tuple[Fact, ...]

    def __post_init__(self):
        if not self.facts:
            raise GroundingError('goal must contain at least one fact')
        object.__setattr__(self, 'facts', tuple(tuple(f) for f in self.facts))

    def satisfied_by(self, state: WorldState) -> bool:
        return all(f in state.facts for f in self.facts)

    def __str__(self) -> str:
        return ' & '.join(f"{f[0]}({','.join(f[1:])})" for f in self.facts)


@dataclass(frozen=True)
class Plan:
    steps: Tuple[GroundAction, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[GroundAction]:
        return iter(self.steps)

    def labels(self) -> List[str]:
        return [str(step) for step in self.steps]


@dataclass(frozen=True)
class NoPlan:
    """Search failed: goal unreachable within depth, or state budget exhausted."""

    reason: str
    expanded: int = 0

    @property
    def budget_exceeded(self) -> bool:
        return self.reason == 'budget_exceeded'


@dataclass(frozen=True)
class Violation:
    check: str
    message: str
    step: Optional[int] = None

    def __str__(self) -> str:
        where = f" at step {self.step}" if self.step is not None else ''
        return f"{self.check}{where}: {self.message}"


# ============================================================================
# GROUNDING
# ============================================================================

def _compile(domain: DomainDef, name: str, args: Tuple[str, ...], types: Dict[str, str]) -> GroundAction:
    schema = domain.action_map[name]
    binding = {p.name: a for p, a in zip(schema.parameters, args)}
    locations = tuple(
        a for p, a in zip(schema.parameters, args) if domain.is_subtype(p.type, 'location')
    )
    return GroundAction(
        name=name,
        args=args,
        preconditions=frozenset(atom.ground(binding) for atom in schema.preconditions),
        add_effects=frozenset(atom.ground(binding) for atom in schema.add_effects),
        del_effects=frozenset(atom.ground(binding) for atom in schema.del_effects),
        locations=locations,
    )


def ground_action(
    domain: DomainDef,
    name: str,
    args: Sequence[str],
    objects: Optional[Iterable[Tuple[str, str]]] = None,
) -> GroundAction:
    """
    Bind an action schema to objects.

    Args:
        domain: Domain holding the schema
        name: Schema name
        args: Object names in parameter order
        objects: (name, type) pairs used for type checking; skipped if None

    Returns:
        Compiled GroundAction
    """
    schema = domain.action_map.get(name)
    if schema is None:
        raise PlanningError(f"Invalid action '{name}'. Valid options: {sorted(domain.action_map)}")
    args = tuple(args)
    if len(args) != len(schema.parameters):
        raise PlanningError(f"action '{name}' takes {len(schema.parameters)} arguments, got {len(args)}")
    types = dict(objects) if objects is not None else {}
    if objects is not None:
        for param, arg in zip(schema.parameters, args):
            arg_type = types.get(arg)
            if arg_type is None or not domain.is_subtype(arg_type, param.type):
                raise PlanningError(f"argument '{arg}' does not fit parameter {param.name} - {param.type} of '{name}'")
    return _compile(domain, name, args, types)


@lru_cache(maxsize=32)
def ground_actions(domain: DomainDef, objects: Tuple[Tuple[str, str], ...]) -> Tuple[GroundAction, ...]:
    """All type-correct ground actions, ordered by schema name then arguments."""
    types = dict(objects)
    names = sorted(types)
    result = []
    for schema in sorted(domain.actions, key=lambda a: a.name):
        candidates = [
            [o for o in names if domain.is_subtype(types[o], p.type)] for p in schema.parameters
        ]
        for args in product(*candidates):
            result.append(_compile(domain, schema.name, tuple(args), types))
    logger.debug(f"Grounded {len(result)} actions over {len(names)} objects")
    return tuple(result)


_GOAL_TABLE = {
    Action.GRASP: (('robot', 'item'), lambda c: [('holding', c.robot, c.item)]),
    Action.RELEASE: (('robot', 'item', 'location'),
                     lambda c: [('item-at', c.item, c.location), ('empty-handed', c.robot)]),
    Action.MOVE_TO: (('robot', 'location'), lambda c: [('at', c.robot, c.location)]),
    Action.ROTATE: (('robot', 'orientation'), lambda c: [('oriented', c.robot, c.orientation)]),
}


def ground_to_goal(intent: Union[Action, str, int], ctx: TaskContext) -> Goal:
    """
    Goal that achieving the intent means in the current task context.

    GRASP -> holding(robot, item); RELEASE -> item-at(item, location) and
    empty-handed(robot); MOVE_TO -> at(robot, location); ROTATE ->
    oriented(robot, orientation).
    """
    action = Action.from_label(intent) if isinstance(intent, str) else Action(intent)
    required, build = _GOAL_TABLE[action]
    missing = [name for name in required if getattr(ctx, name) is None]
    if missing:
        raise GroundingError(f"context lacks {missing} needed to ground {action.label}")
    return Goal(tuple(build(ctx)))


# ============================================================================
# STATE TRANSITION
# ============================================================================

def _successor(facts: FrozenSet[Fact], action: GroundAction) -> FrozenSet[Fact]:
    result = (facts - action.del_effects) | action.add_effects
    for fact in action.add_effects:
        if fact[0] in FUNCTIONAL_PREDICATES:
            stale = {f for f in result if f[0] == fact[0] and f[1] == fact[1] and f != fact}
            if stale:
                result = result - stale
    return result


def _unreachable_locations(facts: FrozenSet[Fact], action: GroundAction) -> List[str]:
    return [loc for loc in action.locations if ('reachable', loc) not in facts]


def applicable(s: WorldState, a: GroundAction) -> bool:
    """True iff every precondition of a holds in s."""
    return a.preconditions <= s.facts


def apply(s: WorldState, a: GroundAction) -> WorldState:
    """
    Successor state: deletes removed, adds inserted.

    Single-valued predicates (at, oriented) drop their previous value when a
    new one is asserted for the same robot.

    Raises:
        PlanningError: If a is not applicable in s
    """
    missing = a.preconditions - s.facts
    if missing:
        raise PlanningError(f"action {a} is not applicable: missing {sorted(missing)}")
    return WorldState(_successor(s.facts, a), s.objects)


# ============================================================================
# SEARCH
# ============================================================================

def synthesize_plan(
    d: DomainDef,
    s0: WorldState,
    g: Goal,
    max_depth: int = PLANNER_MAX_DEPTH,
    max_states: int = PLANNER_MAX_STATES,
) -> Union[Plan, NoPlan]:
    """
    Shortest plan by breadth-first search.

    Steps touching a location without `reachable` are pruned, so returned
    plans always pass the reachability check.

    Args:
        d: Domain
        s0: Initial state
        g: Goal
        max_depth: Longest plan considered
        max_states: Visited-set cap

    Returns:
        Plan (empty if g already holds) or NoPlan
    """
    if max_depth < 0:
        raise PlanningError(f"max_depth must be nonnegative, got {max_depth}")
    goal = frozenset(g.facts)
    if goal <= s0.facts:
        return Plan(())

    actions = ground_actions(d, s0.objects)
    parents: Dict[FrozenSet[Fact], Tuple[Optional[FrozenSet[Fact]], Optional[GroundAction]]] = {
        s0.facts: (None, None)
    }
    depths = {s0.facts: 0}
    frontier = deque([s0.facts])

    while frontier:
        facts = frontier.popleft()
        depth = depths[facts]
        if depth >= max_depth:
            continue
        for action in actions:
            if not action.preconditions <= facts or _unreachable_locations(facts, action):
                continue
            nxt = _successor(facts, action)
            if nxt in parents:
                continue
            parents[nxt] = (facts, action)
            depths[nxt] = depth + 1
            if goal <= nxt:
                return Plan(_unwind(parents, nxt))
            if len(parents) > max_states:
                logger.debug(f"Plan search for {g} exceeded {max_states} states")
                return NoPlan('budget_exceeded', len(parents))
            frontier.append(nxt)
    return NoPlan('unreachable', len(parents))


def _unwind(parents, facts) -> Tuple[GroundAction, ...]:
    steps = []
    while True:
        prev, action = parents[facts]
        if action is None:
            break
        steps.append(action)
        facts = prev
    return tuple(reversed(steps))


# ============================================================================
# LOGICAL CHECKS
# ============================================================================

def check_logical(d: DomainDef, s0: WorldState, plan: Plan) -> List[Violation]:
    """
    Verify a plan against the logical invariants.

    reachability: every location a step references carries `reachable`.
    safe_configuration: `safe-configuration` holds wherever a step requires it.
    transition: every step is applicable in its predecessor state.
    Simulation stops at the first inapplicable step.

    Returns:
        Violations; empty iff the plan verifies
    """
    violations: List[Violation] = []
    facts = s0.facts
    for i, step in enumerate(plan):
        for loc in _unreachable_locations(facts, step):
            violations.append(Violation(REACHABILITY, f"{step} references unreachable location '{loc}'", i))
        missing = step.preconditions - facts
        if not missing:
            facts = _successor(facts, step)
            continue
        if _SAFE in missing:
            violations.append(Violation(SAFE_CONFIGURATION, f"{step} requires safe-configuration", i))
        other = sorted(f for f in missing if f != _SAFE and f[0] != 'reachable')
        if other:
            violations.append(Violation(TRANSITION, f"{step} is not applicable: missing {other}", i))
        break
    return violations


def validate_plan(d: DomainDef, s0: WorldState, plan: Plan) -> bool:
    """True iff every step is applicable in turn."""
    facts = s0.facts
    for step in plan:
        if not step.preconditions <= facts:
            return False
        facts = _successor(facts, step)
    return True


def diagnose_unsolvable(d: DomainDef, state: WorldState, goal: Goal) -> Violation:
    """Most likely reason a goal has no plan, for cause tagging."""
    located = {f[1]: f[2] for f in state.facts if f[0] == 'item-at'}
    for fact in goal.facts:
        if fact in state.facts:
            continue
        schema = d.predicate_map.get(fact[0])
        if schema is not None:
            for param, arg in zip(schema.params, fact[1:]):
                if d.is_subtype(param.type, 'location') and ('reachable', arg) not in state.facts:
                    return Violation(REACHABILITY, f"goal {goal} needs unreachable location '{arg}'")
        if fact[0] in ('holding', 'item-at'):
            item = fact[2] if fact[0] == 'holding' else fact[1]
            loc = located.get(item)
            if loc is not None and ('reachable', loc) not in state.facts:
                return Violation(REACHABILITY, f"item '{item}' sits at unreachable location '{loc}'")
    if _SAFE not in state.facts:
        return Violation(SAFE_CONFIGURATION, f"goal {goal} needs motion but the arm is not in a safe configuration")
    return Violation(TRANSITION, f"no valid transition sequence reaches {goal}")
