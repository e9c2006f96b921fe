"""
Tests for the PDDL reader, validator and printer.
"""

import pytest

from neurogate.errors import PddlParseError
from neurogate.fileio import read_domain, read_problem
from neurogate.pddl import Atom, format_domain, format_problem, parse_domain, parse_problem, read_sexpr

DOMAIN_HEAD = """
(define (domain tiny)
  (:requirements :strips :typing)
  (:types place - object bot - object)
  (:predicates (at ?b - bot ?p - place) (free ?p - place))
"""


def tiny_domain(action):
    return parse_domain(DOMAIN_HEAD + action + ')')


class TestBundledDomain:
    """The shipped assistive-robot domain and tabletop problem."""

    def test_schema_counts(self):
        domain = read_domain()
        assert domain.name == 'assistive-robot'
        assert len(domain.actions) == 4
        assert len(domain.predicates) == 10

    def test_action_names(self):
        assert sorted(read_domain().action_map) == ['grasp', 'move_to', 'release', 'rotate']

    def test_grasp_schema(self):
        grasp = read_domain().action_map['grasp']
        assert [p.type for p in grasp.parameters] == ['robot', 'item', 'location']
        assert Atom('empty-handed', ('?r',)) in grasp.preconditions
        assert Atom('item-at', ('?i', '?l')) in grasp.del_effects

    def test_grouped_parameter_types(self):
        rotate = read_domain().action_map['rotate']
        assert [(p.name, p.type) for p in rotate.parameters] == [
            ('?r', 'robot'), ('?from', 'orientation'), ('?to', 'orientation')]

    def test_problem(self):
        domain = read_domain()
        problem = read_problem(domain)
        assert problem.name == 'tabletop'
        assert ('r1', 'robot') in problem.objects
        assert ('item-at', 'vase', 'shelf') in problem.init
        assert ('reachable', 'shelf') not in problem.init
        assert problem.goal == (('holding', 'r1', 'cup'),)

    def test_printers_reparse_to_equal_values(self):
        domain = read_domain()
        problem = read_problem(domain)
        assert parse_domain(format_domain(domain)) == domain
        assert parse_problem(format_problem(problem), domain) == problem


class TestSyntax:
    """S-expression reading."""

    def test_comments_and_case(self):
        expr = read_sexpr('; header\n(Define (DOMAIN x)) ; trailing')
        assert expr[0] == 'Define'
        assert expr.line == 2

    def test_unbalanced(self):
        with pytest.raises(PddlParseError, match='malformed'):
            read_sexpr('(define (domain x)')

    def test_not_define(self):
        with pytest.raises(PddlParseError, match="expected '\\(define"):
            parse_domain('(domain x)')


class TestUnsupported:
    """Constructs outside STRIPS with typing are rejected with a position."""

    def test_negative_precondition(self):
        with pytest.raises(PddlParseError, match="negative literal 'not'") as info:
            tiny_domain("""
  (:action go
      :parameters (?b - bot ?p - place)
      :precondition (and (free ?p) (not (at ?b ?p)))
      :effect (at ?b ?p))""")
        assert info.value.line is not None

    def test_quantifier(self):
        with pytest.raises(PddlParseError, match="unsupported construct 'forall'"):
            tiny_domain("""
  (:action go
      :parameters (?b - bot)
      :precondition (forall (?p - place) (free ?p))
      :effect ())""")

    def test_requirement(self):
        with pytest.raises(PddlParseError, match="unsupported requirement ':adl'"):
            parse_domain('(define (domain x) (:requirements :strips :adl))')

    def test_constants_section(self):
        with pytest.raises(PddlParseError, match="unsupported section ':constants'"):
            parse_domain('(define (domain x) (:constants a b))')

    def test_either_type(self):
        with pytest.raises(PddlParseError, match='unsupported construct'):
            parse_domain('(define (domain x) (:types a - (either b c)))')


class TestValidation:
    """Semantic checks on well-formed text."""

    def test_undeclared_predicate(self):
        with pytest.raises(PddlParseError, match="undeclared predicate 'near'"):
            tiny_domain("""
  (:action go
      :parameters (?b - bot ?p - place)
      :precondition (near ?b ?p)
      :effect (at ?b ?p))""")

    def test_arity(self):
        with pytest.raises(PddlParseError, match="takes 2 arguments, got 1"):
            tiny_domain("""
  (:action go
      :parameters (?b - bot)
      :precondition ()
      :effect (at ?b))""")

    def test_type_mismatch(self):
        with pytest.raises(PddlParseError, match='does not fit'):
            tiny_domain("""
  (:action go
      :parameters (?b - bot ?p - place)
      :precondition ()
      :effect (at ?p ?b))""")

    def test_undeclared_variable(self):
        with pytest.raises(PddlParseError, match="undeclared variable '\\?q'"):
            tiny_domain("""
  (:action go
      :parameters (?b - bot)
      :precondition ()
      :effect (at ?b ?q))""")

    def test_problem_domain_mismatch(self):
        with pytest.raises(PddlParseError, match="targets domain 'other'"):
            parse_problem('(define (problem p) (:domain other))', read_domain())

    def test_problem_undeclared_object(self):
        text = '(define (problem p) (:domain assistive-robot) (:objects r1 - robot) (:init (at r1 kitchen)))'
        with pytest.raises(PddlParseError, match="undeclared object 'kitchen'"):
            parse_problem(text, read_domain())

    def test_problem_object_type_mismatch(self):
        text = ('(define (problem p) (:domain assistive-robot) '
                '(:objects r1 - robot cup - item) (:init (at r1 cup)))')
        with pytest.raises(PddlParseError, match="object 'cup' of type 'item'"):
            parse_problem(text, read_domain())
