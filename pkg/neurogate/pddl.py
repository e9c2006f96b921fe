"""
STRIPS-with-typing subset of PDDL: parsing, validation and printing.

Text is tokenized into s-expressions by a small lark grammar that keeps
source positions; the semantic pass below builds immutable domain and
problem definitions and rejects anything outside :strips and :typing
(negative preconditions, quantifiers, conditional effects, constants,
numeric fluents) with the construct's name and position.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedInput

from .constants import SUPPORTED_REQUIREMENTS
from .errors import PddlParseError

logger = logging.getLogger(__name__)

Fact = Tuple[str, ...]

_GRAMMAR = r"""
    start: sexpr
    sexpr: "(" _item* ")"
    _item: sexpr | SYMBOL
    SYMBOL: /[^\s();]+/
    COMMENT: /;[^\n]*/
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(_GRAMMAR, parser='lalr', propagate_positions=True)

_UNSUPPORTED_FORMULAS = ('or', 'not', 'imply', 'exists', 'forall', 'when', '=', 'either', 'increase', 'decrease')


# ============================================================================
# S-EXPRESSIONS
# ============================================================================

class SExpr(list):
    """List of symbols and nested SExprs, with its source position."""

    def __init__(self, items, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(items)
        self.line = line
        self.column = column


Node = Union[SExpr, Token]


def _convert(tree: Tree) -> SExpr:
    items = [_convert(child) if isinstance(child, Tree) else child for child in tree.children]
    return SExpr(items, getattr(tree.meta, 'line', None), getattr(tree.meta, 'column', None))


def read_sexpr(text: str) -> SExpr:
    """Parse text holding exactly one top-level s-expression."""
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        raise PddlParseError(f"malformed s-expression: {type(e).__name__}",
                             getattr(e, 'line', None), getattr(e, 'column', None)) from None
    return _convert(tree.children[0])


def _pos(node: Node) -> Tuple[Optional[int], Optional[int]]:
    return getattr(node, 'line', None), getattr(node, 'column', None)


def _error(message: str, node: Node) -> PddlParseError:
    return PddlParseError(message, *_pos(node))


def _symbol(node: Node, what: str) -> str:
    if isinstance(node, SExpr):
        raise _error(f"expected {what}, found a list", node)
    return str(node).lower()


def _keyword(node: Node) -> Optional[str]:
    if isinstance(node, SExpr) or not str(node).startswith(':'):
        return None
    return str(node).lower()


# ============================================================================
# DEFINITIONS
# ============================================================================

@dataclass(frozen=True)
class TypedParam:
    name: str
    type: str = 'object'


@dataclass(frozen=True)
class Atom:
    """Predicate applied to variables or object names."""

    predicate: str
    args: Tuple[str, ...] = ()

    def ground(self, binding: Dict[str, str]) -> Fact:
        return (self.predicate,) + tuple(binding.get(a, a) for a in self.args)


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: Tuple[TypedParam, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: Tuple[TypedParam, ...] = ()
    preconditions: Tuple[Atom, ...] = ()
    add_effects: Tuple[Atom, ...] = ()
    del_effects: Tuple[Atom, ...] = ()


@dataclass(frozen=True)
class DomainDef:
    """Immutable STRIPS domain; shareable across threads."""

    name: str
    requirements: Tuple[str, ...] = ()
    types: Tuple[Tuple[str, str], ...] = ()
    predicates: Tuple[PredicateSchema, ...] = ()
    actions: Tuple[ActionSchema, ...] = ()

    @cached_property
    def predicate_map(self) -> Dict[str, PredicateSchema]:
        return {p.name: p for p in self.predicates}

    @cached_property
    def action_map(self) -> Dict[str, ActionSchema]:
        return {a.name: a for a in self.actions}

    @cached_property
    def type_parents(self) -> Dict[str, str]:
        return dict(self.types)

    def is_subtype(self, type_name: str, ancestor: str) -> bool:
        """True if type_name equals ancestor or descends from it."""
        if ancestor == 'object':
            return True
        seen = set()
        current: Optional[str] = type_name
        while current is not None and current not in seen:
            if current == ancestor:
                return True
            seen.add(current)
            current = self.type_parents.get(current)
        return False

    def knows_type(self, type_name: str) -> bool:
        return type_name == 'object' or type_name in self.type_parents


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: Tuple[Tuple[str, str], ...] = ()
    init: FrozenSet[Fact] = frozenset()
    goal: Tuple[Fact, ...] = ()


# ============================================================================
# PARSING HELPERS
# ============================================================================

def _typed_list(items: Sequence[Node], where: str) -> List[TypedParam]:
    """Parse 'a b - t c - u d' into typed entries (untyped default object)."""
    result: List[TypedParam] = []
    pending: List[str] = []
    i = 0
    while i < len(items):
        node = items[i]
        if isinstance(node, SExpr):
            head = _symbol(node[0], 'type name') if node else ''
            raise _error(f"unsupported construct '({head} ...)' in {where}", node)
        if str(node) == '-':
            if i + 1 >= len(items):
                raise _error(f"missing type after '-' in {where}", node)
            type_node = items[i + 1]
            if isinstance(type_node, SExpr):
                head = _symbol(type_node[0], 'type') if type_node else ''
                raise _error(f"unsupported construct '({head} ...)' in {where}", type_node)
            if not pending:
                raise _error(f"type given without names in {where}", node)
            type_name = str(type_node).lower()
            result.extend(TypedParam(n, type_name) for n in pending)
            pending = []
            i += 2
            continue
        pending.append(str(node).lower())
        i += 1
    result.extend(TypedParam(n) for n in pending)
    return result


def _literal(node: Node, where: str) -> Atom:
    if not isinstance(node, SExpr) or not node:
        raise _error(f"expected a literal in {where}", node)
    head = _symbol(node[0], 'predicate name')
    if head in _UNSUPPORTED_FORMULAS:
        if head == 'not':
            raise _error(f"negative literal 'not' is not supported in {where}", node)
        raise _error(f"unsupported construct '{head}' in {where}", node)
    return Atom(head, tuple(_symbol(arg, 'argument') for arg in node[1:]))


def _conjunction(node: Node, where: str) -> List[Node]:
    """Flatten '(and a b)' / 'a' / '()' into its conjuncts."""
    if not isinstance(node, SExpr):
        raise _error(f"expected a formula in {where}", node)
    if not node:
        return []
    if _symbol(node[0], 'formula head') == 'and':
        return list(node[1:])
    return [node]


def _effects(node: Node, where: str) -> Tuple[List[Atom], List[Atom]]:
    adds: List[Atom] = []
    dels: List[Atom] = []
    for part in _conjunction(node, where):
        if isinstance(part, SExpr) and part and _symbol(part[0], 'effect head') == 'not':
            if len(part) != 2:
                raise _error(f"'not' takes exactly one literal in {where}", part)
            dels.append(_literal(part[1], where))
        else:
            adds.append(_literal(part, where))
    return adds, dels


def _check_header(root: SExpr, kind: str) -> str:
    if not root or _symbol(root[0], "'define'") != 'define':
        raise _error("expected '(define ...)'", root)
    if len(root) < 2 or not isinstance(root[1], SExpr) or len(root[1]) != 2:
        raise _error(f"expected '({kind} <name>)' after define", root)
    if _symbol(root[1][0], kind) != kind:
        raise _error(f"expected '({kind} <name>)', found '{root[1][0]}'", root[1])
    return _symbol(root[1][1], f"{kind} name")


# ============================================================================
# DOMAIN
# ============================================================================

def parse_domain(text: str) -> DomainDef:
    """
    Parse a STRIPS-with-typing domain.

    Args:
        text: PDDL domain text

    Returns:
        Validated DomainDef

    Raises:
        PddlParseError: On malformed text or unsupported constructs
    """
    root = read_sexpr(text)
    name = _check_header(root, 'domain')

    requirements: List[str] = []
    types: Dict[str, str] = {}
    predicates: Dict[str, PredicateSchema] = {}
    actions: Dict[str, ActionSchema] = {}
    pending_actions: List[SExpr] = []

    for section in root[2:]:
        if not isinstance(section, SExpr) or not section or _keyword(section[0]) is None:
            raise _error('expected a domain section', section)
        key = _keyword(section[0])
        if key == ':requirements':
            for req in section[1:]:
                req_name = _symbol(req, 'requirement')
                if req_name not in SUPPORTED_REQUIREMENTS:
                    raise _error(
                        f"unsupported requirement '{req_name}'. Valid options: {list(SUPPORTED_REQUIREMENTS)}", req
                    )
                requirements.append(req_name)
        elif key == ':types':
            for entry in _typed_list(section[1:], ':types'):
                types[entry.name] = entry.type
        elif key == ':predicates':
            for pred in section[1:]:
                if not isinstance(pred, SExpr) or not pred:
                    raise _error('expected a predicate declaration', pred)
                pred_name = _symbol(pred[0], 'predicate name')
                if pred_name in predicates:
                    raise _error(f"duplicate predicate '{pred_name}'", pred)
                predicates[pred_name] = PredicateSchema(pred_name, tuple(_typed_list(pred[1:], pred_name)))
        elif key == ':action':
            pending_actions.append(section)
        else:
            raise _error(f"unsupported section '{key}'", section)

    domain = DomainDef(name, tuple(requirements), tuple(types.items()), tuple(predicates.values()))
    for section in pending_actions:
        action = _parse_action(section, domain)
        if action.name in actions:
            raise _error(f"duplicate action '{action.name}'", section)
        actions[action.name] = action

    for type_name, parent in types.items():
        if not domain.knows_type(parent):
            raise PddlParseError(f"type '{type_name}' has undeclared parent '{parent}'")
    for pred in predicates.values():
        for param in pred.params:
            if not domain.knows_type(param.type):
                raise PddlParseError(f"predicate '{pred.name}' uses undeclared type '{param.type}'")

    result = DomainDef(name, tuple(requirements), tuple(types.items()),
                       tuple(predicates.values()), tuple(actions.values()))
    logger.debug(f"Parsed domain '{name}': {len(result.actions)} actions, {len(result.predicates)} predicates")
    return result


def _parse_action(section: SExpr, domain: DomainDef) -> ActionSchema:
    if len(section) < 2:
        raise _error('action without a name', section)
    name = _symbol(section[1], 'action name')
    fields: Dict[str, Node] = {}
    rest = section[2:]
    for i in range(0, len(rest), 2):
        key = _keyword(rest[i])
        if key not in (':parameters', ':precondition', ':effect'):
            raise _error(f"unsupported action field '{rest[i]}' in action '{name}'", rest[i])
        if i + 1 >= len(rest):
            raise _error(f"missing value for '{key}' in action '{name}'", rest[i])
        fields[key] = rest[i + 1]

    params_node = fields.get(':parameters', SExpr([]))
    if not isinstance(params_node, SExpr):
        raise _error(f"parameters of '{name}' must be a list", params_node)
    params = tuple(_typed_list(params_node, f"parameters of '{name}'"))
    where = f"action '{name}'"
    pre = [_literal(n, where) for n in _conjunction(fields.get(':precondition', SExpr([])), where)]
    adds, dels = _effects(fields.get(':effect', SExpr([])), where)

    scope = {p.name: p.type for p in params}
    for param in params:
        if not param.name.startswith('?'):
            raise _error(f"parameter '{param.name}' of '{name}' must start with '?'", section)
        if not domain.knows_type(param.type):
            raise _error(f"undeclared type '{param.type}' in {where}", section)
    for atom in (*pre, *adds, *dels):
        _check_atom(atom, scope, domain, where, section)
    return ActionSchema(name, params, tuple(pre), tuple(adds), tuple(dels))


def _check_atom(atom: Atom, scope: Dict[str, str], domain: DomainDef, where: str, node: Node) -> None:
    schema = domain.predicate_map.get(atom.predicate)
    if schema is None:
        raise _error(f"undeclared predicate '{atom.predicate}' in {where}", node)
    if len(atom.args) != schema.arity:
        raise _error(
            f"predicate '{atom.predicate}' takes {schema.arity} arguments, got {len(atom.args)} in {where}", node
        )
    for arg, declared in zip(atom.args, schema.params):
        if arg not in scope:
            raise _error(f"undeclared variable '{arg}' in {where}", node)
        if not domain.is_subtype(scope[arg], declared.type):
            raise _error(
                f"'{arg}' of type '{scope[arg]}' does not fit '{declared.type}' in '{atom.predicate}' ({where})", node
            )


# ============================================================================
# PROBLEM
# ============================================================================

def parse_problem(text: str, domain: DomainDef) -> ProblemDef:
    """
    Parse a problem (objects, init, goal) against a domain.

    Args:
        text: PDDL problem text
        domain: Domain the problem refers to

    Returns:
        Validated ProblemDef
    """
    root = read_sexpr(text)
    name = _check_header(root, 'problem')
    domain_name = domain.name
    objects: Dict[str, str] = {}
    init: List[Fact] = []
    goal: List[Fact] = []
    init_nodes: List[Node] = []
    goal_nodes: List[Node] = []

    for section in root[2:]:
        if not isinstance(section, SExpr) or not section or _keyword(section[0]) is None:
            raise _error('expected a problem section', section)
        key = _keyword(section[0])
        if key == ':domain':
            domain_name = _symbol(section[1], 'domain name') if len(section) > 1 else ''
            if domain_name != domain.name:
                raise _error(f"problem targets domain '{domain_name}', loaded domain is '{domain.name}'", section)
        elif key == ':objects':
            for entry in _typed_list(section[1:], ':objects'):
                if not domain.knows_type(entry.type):
                    raise _error(f"object '{entry.name}' has undeclared type '{entry.type}'", section)
                objects[entry.name] = entry.type
        elif key == ':init':
            init_nodes = list(section[1:])
        elif key == ':goal':
            if len(section) != 2:
                raise _error(':goal takes exactly one formula', section)
            goal_nodes = _conjunction(section[1], ':goal')
        else:
            raise _error(f"unsupported section '{key}'", section)

    for node in init_nodes:
        init.append(_ground_fact(node, objects, domain, ':init'))
    for node in goal_nodes:
        goal.append(_ground_fact(node, objects, domain, ':goal'))

    return ProblemDef(name, domain_name, tuple(objects.items()), frozenset(init), tuple(goal))


def _ground_fact(node: Node, objects: Dict[str, str], domain: DomainDef, where: str) -> Fact:
    atom = _literal(node, where)
    schema = domain.predicate_map.get(atom.predicate)
    if schema is None:
        raise _error(f"undeclared predicate '{atom.predicate}' in {where}", node)
    if len(atom.args) != schema.arity:
        raise _error(f"predicate '{atom.predicate}' takes {schema.arity} arguments in {where}", node)
    for arg, declared in zip(atom.args, schema.params):
        if arg not in objects:
            raise _error(f"undeclared object '{arg}' in {where}", node)
        if not domain.is_subtype(objects[arg], declared.type):
            raise _error(f"object '{arg}' of type '{objects[arg]}' does not fit '{atom.predicate}' in {where}", node)
    return (atom.predicate,) + atom.args


# ============================================================================
# PRINTING
# ============================================================================

def _format_params(params: Sequence[TypedParam]) -> str:
    return ' '.join(f"{p.name} - {p.type}" for p in params)


def _format_atom(atom: Union[Atom, Fact]) -> str:
    parts = (atom.predicate, *atom.args) if isinstance(atom, Atom) else atom
    return '(' + ' '.join(parts) + ')'


def format_domain(domain: DomainDef) -> str:
    """Print a domain; the output re-parses to an equal DomainDef."""
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        lines.append('  (:types')
        lines.extend(f"      {name} - {parent}" for name, parent in domain.types)
        lines.append('    )')
    if domain.predicates:
        lines.append('  (:predicates')
        for pred in domain.predicates:
            body = f" {_format_params(pred.params)}" if pred.params else ''
            lines.append(f"      ({pred.name}{body})")
        lines.append('    )')
    for action in domain.actions:
        pre = ' '.join(_format_atom(a) for a in action.preconditions)
        effects = [_format_atom(a) for a in action.add_effects]
        effects += [f"(not {_format_atom(a)})" for a in action.del_effects]
        lines.append(f"  (:action {action.name}")
        lines.append(f"      :parameters ({_format_params(action.parameters)})")
        lines.append(f"      :precondition (and {pre})" if pre else '      :precondition ()')
        lines.append(f"      :effect (and {' '.join(effects)}))" if effects else '      :effect ())')
    lines.append(')')
    return '\n'.join(lines) + '\n'


def format_problem(problem: ProblemDef) -> str:
    """Print a problem; the output re-parses to an equal ProblemDef."""
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        lines.append('  (:objects ' + ' '.join(f"{n} - {t}" for n, t in problem.objects) + ')')
    lines.append('  (:init')
    lines.extend(f"      {_format_atom(f)}" for f in sorted(problem.init))
    lines.append('    )')
    goal = ' '.join(_format_atom(f) for f in problem.goal)
    lines.append(f"  (:goal (and {goal}))" if goal else '  (:goal ())')
    lines.append(')')
    return '\n'.join(lines) + '\n'
